use std::collections::BTreeMap;

use super::{
    associate, crop_window, detect_apex, select_skater, ApexEstimate, CropConfig, JumpWindow,
    KalmanBoxTracker, TrackerConfig, TrackerError,
};
use crate::ingest::{BBox, DetectionRecord, PoseSequence};

/// Matched detections of one track, in frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackHistory {
    pub track_id: u64,
    pub frames: Vec<u64>,
    pub boxes: Vec<BBox>,
}

impl TrackHistory {
    pub fn first_frame(&self) -> Option<u64> {
        self.frames.first().copied()
    }

    /// Box-centre `y` for every frame from the first to the last match,
    /// with missed frames linearly interpolated.
    pub fn center_y_series(&self) -> (u64, Vec<f64>) {
        let Some(first) = self.first_frame() else {
            return (0, Vec::new());
        };
        let mut out = Vec::new();
        for (i, (&f, b)) in self.frames.iter().zip(&self.boxes).enumerate() {
            let y = b.center().1;
            if i > 0 {
                let (pf, py) = (self.frames[i - 1], self.boxes[i - 1].center().1);
                for k in 1..(f - pf) {
                    let a = k as f64 / (f - pf) as f64;
                    out.push(py + a * (y - py));
                }
            }
            out.push(y);
        }
        (first, out)
    }
}

/// Online multi-object tracker. Each live track keeps a Kalman filter and
/// the raw detections it was matched to.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    live: Vec<(KalmanBoxTracker, TrackHistory)>,
    done: Vec<TrackHistory>,
    next_id: u64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Tracker {
            config,
            live: Vec::new(),
            done: Vec::new(),
            next_id: 1,
        }
    }

    /// Processes one frame. Returns `(track_id, box)` for confirmed tracks
    /// matched in this frame.
    pub fn step(&mut self, frame_idx: u64, detections: &[BBox]) -> Vec<(u64, BBox)> {
        let predicted: Vec<BBox> = self.live.iter_mut().map(|(k, _)| k.predict()).collect();
        let assoc = associate(&predicted, detections, self.config.iou_min);
        let mut out = Vec::new();
        for &(ti, di, _) in &assoc.matches {
            let (k, h) = &mut self.live[ti];
            k.update(&detections[di]);
            h.frames.push(frame_idx);
            h.boxes.push(detections[di]);
            if k.track.hit_streak >= self.config.min_hits {
                out.push((k.track.track_id, detections[di]));
            }
        }
        for &di in &assoc.unmatched_detections {
            let id = self.next_id;
            self.next_id += 1;
            let k = KalmanBoxTracker::new(id, &detections[di]);
            let h = TrackHistory {
                track_id: id,
                frames: vec![frame_idx],
                boxes: vec![detections[di]],
            };
            if self.config.min_hits <= 1 {
                out.push((id, detections[di]));
            }
            self.live.push((k, h));
        }
        let max_age = self.config.max_age;
        let (dead, alive): (Vec<_>, Vec<_>) = std::mem::take(&mut self.live)
            .into_iter()
            .partition(|(k, _)| k.track.time_since_update > max_age);
        self.live = alive;
        self.done.extend(dead.into_iter().map(|(_, h)| h));
        out.sort_by_key(|&(id, _)| id);
        out
    }

    /// Ends tracking. Tracks with fewer than `min_hits` matches are dropped;
    /// the rest are returned in id order.
    pub fn finish(mut self) -> Vec<TrackHistory> {
        self.done.extend(self.live.drain(..).map(|(_, h)| h));
        let min_hits = self.config.min_hits as usize;
        let mut out: Vec<TrackHistory> = self
            .done
            .into_iter()
            .filter(|h| h.frames.len() >= min_hits)
            .collect();
        out.sort_by_key(|h| h.track_id);
        out
    }
}

/// Runs the tracker over every frame from the first to the last detection.
pub fn run_tracker(detections: &[DetectionRecord], config: &TrackerConfig) -> Vec<TrackHistory> {
    let mut by_frame: BTreeMap<u64, Vec<BBox>> = BTreeMap::new();
    for d in detections {
        by_frame.entry(d.frame_idx).or_default().push(d.bbox);
    }
    let mut tracker = Tracker::new(*config);
    if let (Some(&lo), Some(&hi)) = (by_frame.keys().next(), by_frame.keys().next_back()) {
        for f in lo..=hi {
            let dets = by_frame.get(&f).map(Vec::as_slice).unwrap_or(&[]);
            tracker.step(f, dets);
        }
    }
    tracker.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentResult {
    pub window: JumpWindow,
    pub pose: PoseSequence,
    /// Apex in absolute frame indices.
    pub apex: ApexEstimate,
    pub n_tracks: usize,
}

/// Tracks the detections, picks the jumping skater, finds the apex and crops
/// the pose sequence around it. Detection frame indices address pose frames.
pub fn segment_jump(
    detections: &[DetectionRecord],
    pose: &PoseSequence,
    tracker_config: &TrackerConfig,
    crop_config: &CropConfig,
) -> Result<SegmentResult, TrackerError> {
    tracker_config.check()?;
    let tracks = run_tracker(detections, tracker_config);
    let id = select_skater(&tracks, tracker_config)?;
    let track = tracks
        .iter()
        .find(|t| t.track_id == id)
        .expect("selected track exists");
    let (first, ys) = track.center_y_series();
    let local = detect_apex(&ys, tracker_config.smoothing_window)?;
    let apex = ApexEstimate {
        frame: local.frame + first as usize,
        refined: local.refined + first as f64,
    };
    let (cropped, mut window) = crop_window(pose, apex.frame, crop_config)?;
    window.track_id = Some(id);
    Ok(SegmentResult {
        window,
        pose: cropped,
        apex,
        n_tracks: tracks.len(),
    })
}

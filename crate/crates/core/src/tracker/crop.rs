use serde::{Deserialize, Serialize};

use super::TrackerError;
use crate::ingest::PoseSequence;

/// Crop geometry in frames at the capture rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropConfig {
    pub window_len: usize,
    /// Index of the take-off frame inside the cropped window.
    pub aligned_index: usize,
    /// Frames from take-off to apex.
    pub takeoff_offset: usize,
}

impl CropConfig {
    /// 51 frames with take-off at index 25 when expressed at 60 fps, and a
    /// quarter second from take-off to apex.
    pub fn for_fps(fps: f64) -> Self {
        let k = fps / 60.0;
        CropConfig {
            window_len: (51.0 * k).round() as usize,
            aligned_index: (25.0 * k).round() as usize,
            takeoff_offset: (0.25 * fps).round() as usize,
        }
    }
}

impl Default for CropConfig {
    fn default() -> Self {
        CropConfig::for_fps(240.0)
    }
}

/// Where the jump was found and which frames were kept (inclusive bounds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JumpWindow {
    pub track_id: Option<u64>,
    pub apex_frame: usize,
    pub takeoff_frame: usize,
    pub start: usize,
    pub end: usize,
}

pub fn crop_window(
    seq: &PoseSequence,
    apex_frame: usize,
    config: &CropConfig,
) -> Result<(PoseSequence, JumpWindow), TrackerError> {
    let fail = |why: String| TrackerError::InsufficientContext(why);
    if config.window_len == 0 || config.aligned_index >= config.window_len {
        return Err(TrackerError::Config(format!(
            "aligned index {} outside window of {} frames",
            config.aligned_index, config.window_len
        )));
    }
    if apex_frame >= seq.len() {
        return Err(fail(format!(
            "apex frame {apex_frame} beyond sequence of {} frames",
            seq.len()
        )));
    }
    let takeoff = apex_frame
        .checked_sub(config.takeoff_offset)
        .ok_or_else(|| fail(format!("apex frame {apex_frame} is earlier than the take-off offset")))?;
    let start = takeoff
        .checked_sub(config.aligned_index)
        .ok_or_else(|| {
            fail(format!(
                "take-off frame {takeoff} leaves fewer than {} frames before it",
                config.aligned_index
            ))
        })?;
    let end = start + config.window_len - 1;
    if end >= seq.len() {
        return Err(fail(format!(
            "window [{start}, {end}] exceeds sequence of {} frames",
            seq.len()
        )));
    }
    Ok((
        PoseSequence {
            fps: seq.fps,
            frames: seq.frames[start..=end].to_vec(),
        },
        JumpWindow {
            track_id: None,
            apex_frame,
            takeoff_frame: takeoff,
            start,
            end,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::JOINT_COUNT;

    fn seq(n: usize) -> PoseSequence {
        PoseSequence {
            fps: 240.0,
            frames: (0..n).map(|t| [[t as f64; 3]; JOINT_COUNT]).collect(),
        }
    }

    #[test]
    fn default_geometry() {
        assert_eq!(
            CropConfig::for_fps(240.0),
            CropConfig { window_len: 204, aligned_index: 100, takeoff_offset: 60 }
        );
        assert_eq!(
            CropConfig::for_fps(60.0),
            CropConfig { window_len: 51, aligned_index: 25, takeoff_offset: 15 }
        );
    }

    #[test]
    fn apex_240_window() {
        let (out, w) = crop_window(&seq(480), 240, &CropConfig::for_fps(240.0)).unwrap();
        assert_eq!((w.start, w.end), (80, 283));
        assert_eq!(w.takeoff_frame, 180);
        assert_eq!(out.len(), 204);
        // take-off sits at the aligned index
        assert_eq!(out.frames[100][0][0], 180.0);
    }

    #[test]
    fn too_close_to_start() {
        let e = crop_window(&seq(480), 5, &CropConfig::for_fps(240.0)).unwrap_err();
        assert!(e.to_string().starts_with("insufficient context around apex"));
        let e = crop_window(&seq(280), 250, &CropConfig::for_fps(240.0)).unwrap_err();
        assert!(matches!(e, TrackerError::InsufficientContext(_)));
    }

    #[test]
    fn single_frame_window() {
        let cfg = CropConfig { window_len: 1, aligned_index: 0, takeoff_offset: 0 };
        let (out, w) = crop_window(&seq(10), 7, &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.frames[0][0][0], 7.0);
        assert_eq!((w.start, w.end, w.apex_frame), (7, 7, 7));
    }
}

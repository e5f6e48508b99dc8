use super::{TrackHistory, TrackerConfig, TrackerError};

/// Moving average of the central-difference velocity of a series.
/// `values[k]` is the smoothed velocity at series index `offset + k`; only
/// indices whose whole window lies inside the central-difference range are
/// kept.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedVelocity {
    pub offset: usize,
    pub values: Vec<f64>,
}

pub fn smoothed_vertical_velocity(series: &[f64], window: usize) -> SmoothedVelocity {
    let n = series.len();
    let h = window / 2;
    if n < 3 || n < window + 2 {
        return SmoothedVelocity {
            offset: 0,
            values: Vec::new(),
        };
    }
    // v[t - 1] is the central difference at t, for t in 1..=n-2
    let v: Vec<f64> = (1..n - 1)
        .map(|t| (series[t + 1] - series[t - 1]) / 2.0)
        .collect();
    let values = (h..v.len() - h)
        .map(|c| v[c - h..=c + h].iter().sum::<f64>() / window as f64)
        .collect();
    SmoothedVelocity {
        offset: 1 + h,
        values,
    }
}

/// Max minus min of the smoothed vertical velocity.
pub fn velocity_change(series: &[f64], window: usize) -> f64 {
    let s = smoothed_vertical_velocity(series, window);
    if s.values.is_empty() {
        return 0.0;
    }
    let max = s.values.iter().copied().fold(f64::MIN, f64::max);
    let min = s.values.iter().copied().fold(f64::MAX, f64::min);
    max - min
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApexEstimate {
    /// Series index of the apex, rounded to the nearest frame.
    pub frame: usize,
    /// Sub-frame zero crossing.
    pub refined: f64,
}

/// Apex of a bbox-centre `y` series in image coordinates (y down).
///
/// Upward motion has negative velocity, so the apex is a negative-to-positive
/// zero crossing of the smoothed velocity. The search starts at the most
/// negative velocity (the strongest upward motion) so that jitter during the
/// approach cannot produce an earlier crossing. The crossing is refined by
/// linear interpolation and rounded half away from zero.
pub fn detect_apex(center_y: &[f64], window: usize) -> Result<ApexEstimate, TrackerError> {
    if center_y.len() < window + 2 {
        return Err(TrackerError::NoApex(format!(
            "track has {} frames, needs at least {}",
            center_y.len(),
            window + 2
        )));
    }
    let s = smoothed_vertical_velocity(center_y, window);
    let vals = &s.values;
    let start = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .filter(|&i| vals[i] < 0.0)
        .ok_or_else(|| TrackerError::NoApex("no upward motion".into()))?;
    for k in start..vals.len() - 1 {
        let (a, b) = (vals[k], vals[k + 1]);
        if b >= 0.0 {
            let frac = if b == 0.0 { 1.0 } else { a / (a - b) };
            let refined = (s.offset + k) as f64 + frac;
            return Ok(ApexEstimate {
                frame: refined.round() as usize,
                refined,
            });
        }
    }
    Err(TrackerError::NoApex(
        "vertical velocity never turns downward".into(),
    ))
}

/// Picks the jumping skater: the track with the largest smoothed
/// vertical-velocity change above `config.v_change_min`. Ties go to the
/// lower track id.
pub fn select_skater(tracks: &[TrackHistory], config: &TrackerConfig) -> Result<u64, TrackerError> {
    if tracks.is_empty() {
        return Err(TrackerError::NoJump("no finished tracks".into()));
    }
    let mut best: Option<(u64, f64)> = None;
    let mut max_seen = 0.0f64;
    for t in tracks {
        let (_, ys) = t.center_y_series();
        let change = velocity_change(&ys, config.smoothing_window);
        max_seen = max_seen.max(change);
        if change > config.v_change_min
            && best.is_none_or(|(id, c)| change > c || (change == c && t.track_id < id))
        {
            best = Some((t.track_id, change));
        }
    }
    best.map(|(id, _)| id).ok_or_else(|| {
        TrackerError::NoJump(format!(
            "largest vertical velocity change {max_seen:.4} px/frame does not exceed {:.4}",
            config.v_change_min
        ))
    })
}

//! Jump segmentation from person detections.
//!
//! Detections are linked into tracks by a constant-velocity Kalman filter
//! with optimal IoU assignment. The jumping skater is the track whose
//! smoothed vertical velocity changes the most; the apex is where that
//! velocity crosses zero, and the pose sequence is cropped so the take-off
//! lands at a fixed index.

mod apex;
mod assign;
mod crop;
mod kalman;
mod sort;

pub use apex::{
    detect_apex, select_skater, smoothed_vertical_velocity, velocity_change, ApexEstimate,
    SmoothedVelocity,
};
pub use assign::{associate, hungarian_max, Association};
pub use crop::{crop_window, CropConfig, JumpWindow};
pub use kalman::{KalmanBoxTracker, TrackState};
pub use sort::{run_tracker, segment_jump, SegmentResult, TrackHistory, Tracker};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrackerError {
    #[error("no jump detected: {0}")]
    NoJump(String),
    #[error("no apex found: {0}")]
    NoApex(String),
    #[error("insufficient context around apex: {0}")]
    InsufficientContext(String),
    #[error("invalid tracker configuration: {0}")]
    Config(String),
}

/// Association, track management and apex detection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackerConfig {
    pub iou_min: f64,
    /// Frames a track survives without a matched detection.
    pub max_age: u32,
    /// Consecutive matches before a track is confirmed.
    pub min_hits: u32,
    /// Moving-average width (odd, frames) for the vertical velocity.
    pub smoothing_window: usize,
    /// Minimum max-minus-min smoothed vertical velocity (px/frame) for a
    /// track to count as jumping.
    pub v_change_min: f64,
}

impl TrackerConfig {
    /// Defaults for footage at `fps`. The smoothing window covers a quarter
    /// second; the velocity threshold is scaled from its 240 fps value.
    pub fn for_fps(fps: f64) -> Self {
        let mut w = (0.25 * fps).round() as usize;
        if w % 2 == 0 {
            w += 1;
        }
        TrackerConfig {
            iou_min: 0.3,
            max_age: 30,
            min_hits: 3,
            smoothing_window: w.max(1),
            v_change_min: DEFAULT_V_CHANGE_MIN_240 * 240.0 / fps,
        }
    }

    pub fn check(&self) -> Result<(), TrackerError> {
        if !(self.iou_min > 0.0 && self.iou_min < 1.0) {
            return Err(TrackerError::Config(format!(
                "iou_min must be in (0, 1), got {}",
                self.iou_min
            )));
        }
        if self.smoothing_window == 0 || self.smoothing_window % 2 == 0 {
            return Err(TrackerError::Config(format!(
                "smoothing_window must be odd, got {}",
                self.smoothing_window
            )));
        }
        if self.min_hits == 0 {
            return Err(TrackerError::Config("min_hits must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig::for_fps(240.0)
    }
}

/// Half the smoothed velocity change of the weakest default synthetic jump
/// at 240 fps (see `synth::calibrate_v_change_min`).
pub const DEFAULT_V_CHANGE_MIN_240: f64 = 0.9835;

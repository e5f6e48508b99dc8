//! Parsing and validation of the on-disk data model.
//!
//! File formats:
//!
//! - detections: one JSON object per line,
//!   `{"frame_idx":0,"bbox":[x1,y1,x2,y2],"confidence":0.9}`;
//! - pose: `#`-prefixed header (`fps`, `joints`, optional `up`), then one row
//!   of 51 reals per frame;
//! - angles: header with `fps`, then one row of roll/pitch/yaw degrees per
//!   frame;
//! - manifest: CSV with one sample per row, paths relative to the manifest.

mod dataset;
mod detections;
mod pose;
mod validate;

pub use dataset::{
    load_dataset, write_manifest, Dataset, EdgeLabel, JumpSample, LoadOptions, ManifestRow,
    Rejection, Source, TABLE_ONE, TABLE_ONE_TOTALS, TEXT_CLAIMED_TOTALS,
};
pub use detections::{parse_detections, write_detections, BBox, DetectionRecord};
pub use pose::{
    parse_angle_sequence, parse_pose_sequence, parse_pose_sequence_with_gaps, write_angle_sequence,
    write_pose_sequence, Frame, PoseSequence, SkateAngleSequence,
};
pub use validate::{validate_sample, DEFAULT_MAX_GAP};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("cannot load {path}: {message}")]
    Load { path: String, message: String },
}

impl IngestError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            message: message.into(),
        }
    }
}

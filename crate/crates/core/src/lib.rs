//! Edge-error judgment for Lutz take-offs from 3D pose and skate-angle time
//! series.
//!
//! The crate is organised as a pipeline:
//!
//! - [`ingest`] parses detection streams, pose and angle files, and dataset
//!   manifests.
//! - [`tracker`] runs a SORT-style tracker over detections, picks the jumping
//!   skater, finds the jump apex and crops a take-off aligned window.
//! - [`preprocess`] normalises poses, decimates them and builds the ten
//!   feature configurations.
//! - [`classifier`] is an L2-regularised logistic regression.
//! - [`eval`] holds leave-one-skater-out cross-validation, metrics, feature
//!   importance and trajectory distances.
//! - [`synth`] generates closed-form synthetic jumps used as a test oracle.
//! - [`pipeline`] glues the stages together and writes reports.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

pub mod classifier;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod par;
pub mod pipeline;
pub mod preprocess;
pub mod skeleton;
pub mod synth;
pub mod tracker;

pub use error::{Error, Result};

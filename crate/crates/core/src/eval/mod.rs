//! Leave-one-skater-out evaluation and model analytics.

mod cv;
mod importance;
mod metrics;
mod trajectory;

pub use cv::{
    format_percent_pm, loso_cv, loso_cv_with_models, Aggregate, CVReport, FoldOutcome, FoldResult,
    Judge, Learner, Logistic, LosoOptions, SamplePrediction,
};
pub use importance::{feature_importance, importance_from_weights, GroupImportance, ImportanceReport};
pub use metrics::{accuracy, accuracy_with, confusion, f_measure, AccuracyFormula, ConfusionMatrix};
pub use trajectory::{
    class_mean_trajectories, trajectory_distance, TrajectoryDistance, TrajectoryMode,
    TrajectoryOptions,
};

use thiserror::Error;

use crate::preprocess::PreprocessError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {predictions} predictions vs {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("empty confusion matrix")]
    EmptyMatrix,
    #[error("cross-validation needs at least 2 skaters with {config} data, found {found}")]
    TooFewSkaters { config: String, found: usize },
    #[error("trajectory distance undefined for skater {skater}: {reason}")]
    Undefined { skater: String, reason: String },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::eval::EvalError;
use crate::ingest::IngestError;
use crate::preprocess::PreprocessError;
use crate::tracker::TrackerError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error for pipeline entry points.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True when the failure came from reading or validating input data
    /// rather than from training or evaluation.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Ingest(_) | Error::Io { .. } | Error::Tracker(_) | Error::Preprocess(_)
        )
    }
}

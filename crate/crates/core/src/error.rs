use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value produced by `{primitive}`")]
    NonFinite { primitive: &'static str },

    #[error("{0}: batch is empty")]
    EmptyBatch(&'static str),

    #[error("insufficient samples: requested {requested}, buffer holds {available}")]
    InsufficientSamples { requested: usize, available: usize },

    #[error(
        "loss {loss} is not above baseline {baseline} + {min_gap}; \
         lower the reward baseline below the smallest attainable loss"
    )]
    BaselineTooHigh {
        loss: f64,
        baseline: f64,
        min_gap: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}, line {line}: {message}")]
    MalformedCsv {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("gradient check failed for {0}")]
    GradientCheck(String),

    #[error("{0}: dataset has no rows")]
    EmptyDataset(PathBuf),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(context: impl Into<String>, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            got,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than by
    /// a failure while running.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Json(_)
                | Error::BaselineTooHigh { .. }
                | Error::MalformedCsv { .. }
                | Error::EmptyDataset(_)
        )
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ExemError>;

#[derive(Debug, Error)]
pub enum ExemError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("{what} did not converge after {iterations} iterations (final gap {gap:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        gap: f64,
    },

    /// Solver failure while training one output dimension of the exemplar predictor.
    #[error("regressor for output dimension {dim}: {source}")]
    Regressor {
        dim: usize,
        #[source]
        source: Box<ExemError>,
    },

    #[error("{path}: parse error at {location}: {msg}")]
    Parse {
        path: PathBuf,
        location: String,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExemError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        ExemError::Domain(msg.into())
    }

    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        ExemError::Dimension {
            context,
            expected,
            found,
        }
    }
}

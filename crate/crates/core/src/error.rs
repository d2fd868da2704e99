use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: {0}")]
    InputShape(String),

    #[error("matrix could not be factorized: {0}")]
    Conditioning(String),

    #[error("non-finite evaluation: {message} (at y = {at:?})")]
    Evaluation { message: String, at: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Configuration(String),

    /// A configuration file rejected at a known location.
    #[error("{origin}:{line}: key '{key}': {message}")]
    Rejected {
        origin: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error("flowsheet did not converge after {iterations} iterations (last residual {last_residual:e})")]
    Simulation {
        iterations: usize,
        last_residual: f64,
        residual_history: Vec<f64>,
    },

    #[error("fit of output {index} failed: {source}")]
    Output {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit status: 2 for rejected configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Configuration(_) | Error::Rejected { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::InputShape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }
}

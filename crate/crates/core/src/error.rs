use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two inputs that must agree in length or bucket cardinality do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Snapshots were presented out of day order.
    #[error("sequencing error: {0}")]
    Sequencing(String),

    /// A generator or monitor specification is internally inconsistent.
    #[error("invalid spec: {0}")]
    Spec(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Input that parsed but breaks a dataset-level invariant.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Self::Shape(msg.into())
    }

    pub(crate) fn spec(msg: impl Into<String>) -> Self {
        Self::Spec(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

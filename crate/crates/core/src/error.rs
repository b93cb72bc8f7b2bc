use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation. The message
    /// names the violated condition.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("degenerate mixture: {0}")]
    DegenerateMixture(String),

    /// The two 1-D components are identical, so no decision boundary exists.
    #[error("no decision boundary: {0}")]
    NoBoundary(String),

    #[error("numeric failure after {iterations} iterations: {message}")]
    Numeric { iterations: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

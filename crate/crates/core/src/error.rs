use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("series did not converge after {terms} terms")]
    NonConvergent { terms: usize },

    #[error("growth rate unbounded: predicate never satisfied up to {limit:e}")]
    Unbounded { limit: f64 },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error in `{input}` at position {position}: {message}")]
    Parse {
        input: String,
        position: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

use std::io;

use thiserror::Error;

/// Errors produced by the restoration library.
#[derive(Debug, Error)]
pub enum PgqError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("value outside the function domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite iterate at iteration {iter}: {what}")]
    NonFinite { iter: usize, what: String },

    #[error("baseline estimator failed: {0}")]
    Baseline(String),

    #[error("image format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, PgqError>;

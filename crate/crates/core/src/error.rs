//! Crate-wide error type.

/// Errors produced by configuration validation and numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Matrix dimensions do not line up for the requested operation.
    #[error("dimension mismatch: {0}")]
    Shape(String),

    /// An operation required full row rank and the input does not have it.
    #[error("rank-deficient input: {0}")]
    RankDeficient(String),

    /// A dense factorization (SVD, eigen, Cholesky) failed to converge or
    /// the input was not positive definite.
    #[error("factorization failed: {0}")]
    Factorization(String),

    /// A NaN or infinity appeared where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors shared by every numerical module in the crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("feature not supported: {0}")]
    Unsupported(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("solver failed to converge: {0}")]
    Convergence(String),

    #[error("quadrature tail not under control: {0}")]
    Tail(String),

    #[error("insufficient smoothness/decay metadata: {0}")]
    InsufficientMetadata(String),
}

pub type Result<T> = std::result::Result<T, Error>;

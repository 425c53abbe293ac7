//! Error type shared by the library modules.

use thiserror::Error;

/// Errors produced by the numerical and learning components.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions do not conform.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A value was NaN or infinite where a finite number is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// An iterative numerical procedure failed.
    #[error("numerical failure in {op}: {detail}")]
    Numerical { op: &'static str, detail: String },

    /// A parameter is outside its valid range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Input data rejected before any computation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Operation called in a state that does not permit it.
    #[error("invalid state: {0}")]
    State(&'static str),

    /// API misuse, e.g. stepping a finished episode.
    #[error("usage error: {0}")]
    Usage(&'static str),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

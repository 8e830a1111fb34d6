//! Error type shared by every module.

use alloc::string::String;

/// Failure modes of the toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("unsupported delay: {0}")]
    UnsupportedDelay(String),
    #[error("class mismatch: predicted {predicted}, observed {observed}")]
    ClassMismatch { predicted: String, observed: String },
    #[error("delay causality violated: lookup at {lookup} beyond integration front {front}")]
    Causality { lookup: f64, front: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}

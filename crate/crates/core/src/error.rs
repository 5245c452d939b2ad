//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CracError {
    /// A documented precondition or invariant was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    /// A run was requested with nothing to do (e.g. zero trials).
    #[error("empty run: {0}")]
    EmptyRun(String),
    /// Connection-level failure in the two-endpoint protocol mode.
    #[error("transport failure: {0}")]
    Transport(String),
    /// A wire frame or payload could not be decoded.
    #[error("malformed frame: {0}")]
    Frame(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CracError {
    pub fn contract(msg: impl Into<String>) -> Self {
        CracError::Contract(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CracError>;

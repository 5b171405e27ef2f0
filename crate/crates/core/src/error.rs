use thiserror::Error;

use crate::matrix::CMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("overflow guard: {0}")]
    Overflow(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("extraction did not converge after {n_used} doublings (last step {last_delta:e})")]
    NotConverged { input: Box<CMatrix>, n_used: usize, last_delta: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by the discretization, oracle and solver layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular system while factoring {context} (pivot {pivot:e} at row {row})")]
    Singular {
        context: String,
        row: usize,
        pivot: f64,
    },

    #[error("solution diverged at step {step} ({location})")]
    Divergence { step: usize, location: String },

    #[error(
        "quadrature oracle did not reach tolerance {tol:e} at x = {x} \
         (estimate {estimate:e}, last change {change:e})"
    )]
    OracleFailure {
        x: f64,
        tol: f64,
        estimate: f64,
        change: f64,
    },
}

/// Coarse classification of a [`FracError`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    InvalidArgument,
    Singular,
    Divergence,
    OracleFailure,
}

impl FracError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            FracError::InvalidArgument(_) => ErrorKind::InvalidArgument,
            FracError::Singular { .. } => ErrorKind::Singular,
            FracError::Divergence { .. } => ErrorKind::Divergence,
            FracError::OracleFailure { .. } => ErrorKind::OracleFailure,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        FracError::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, FracError>;

use std::path::Path;

use fracadi_core::{ErrorKind, FracError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Solver(#[from] FracError),

    /// A study entry failed after the report was written.
    #[error("{message}")]
    Entry { kind: ErrorKind, message: String },

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        let by_kind = |k: ErrorKind| match k {
            ErrorKind::InvalidArgument => 2,
            ErrorKind::Singular | ErrorKind::Divergence => 3,
            ErrorKind::OracleFailure => 4,
        };
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Solver(e) => by_kind(e.kind()),
            CliError::Entry { kind, .. } => by_kind(*kind),
            CliError::CheckFailed(_) => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_failure_class() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::CheckFailed("x".into()).exit_code(), 1);
        let div = FracError::Divergence {
            step: 3,
            location: "node 2".into(),
        };
        assert_eq!(CliError::from(div).exit_code(), 3);
        let oracle = FracError::OracleFailure {
            x: 0.5,
            tol: 1e-10,
            estimate: 0.0,
            change: 1.0,
        };
        assert_eq!(CliError::from(oracle).exit_code(), 4);
        let entry = CliError::Entry {
            kind: ErrorKind::Singular,
            message: "x".into(),
        };
        assert_eq!(entry.exit_code(), 3);
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the beamforming library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e} < -{eps:e}")]
    NotPsd { min_eigenvalue: f64, eps: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("subproblem infeasible at iteration {iteration}: {stage}")]
    SubproblemInfeasible { iteration: usize, stage: &'static str },

    #[error("infeasible for cluster {cluster}: {reason}")]
    Infeasible { cluster: usize, reason: String },

    #[error("conic solver failure: {0}")]
    Solver(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

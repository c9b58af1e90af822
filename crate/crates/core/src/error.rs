use std::path::PathBuf;

use thiserror::Error;

use crate::polytope::HPolyhedron;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violated one of its domain invariants.
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("regressors are rank deficient (rank {rank} < 3)")]
    RankDeficient { rank: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("constraint system is infeasible (empty set)")]
    EmptySet,

    #[error("no fixed point after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        last: Box<HPolyhedron>,
    },

    #[error("target is not reachable from the initial state in {horizon} step(s)")]
    Unreachable { horizon: usize },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

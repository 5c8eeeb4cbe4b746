//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("trajectory left the map domain at step {step}: node {node} reached {value}")]
    TrajectoryEscape { step: usize, node: usize, value: f64 },

    #[error("non-finite value for node {node} at time {time}")]
    NonFinite { node: usize, time: usize },

    #[error("empty correlation curve: every radius in [{eps_min}, {eps_max}) counted zero pairs")]
    EmptyCurve { eps_min: f64, eps_max: f64 },

    #[error("cannot fit a slope through {got} points, need at least {needed}")]
    NotEnoughPoints { needed: usize, got: usize },

    #[error("degenerate abscissa: all ln(eps) values coincide")]
    DegenerateAbscissa,

    #[error("node {node} out of range for {n_nodes} nodes")]
    NodeOutOfRange { node: usize, n_nodes: usize },

    #[error("cannot embed: both the future and the conditioning node sets are empty")]
    EmptyEmbedding,

    #[error("inference for node {node} failed at iteration {iteration}: {source}")]
    NodeInference {
        node: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse error classes, used by the command line tool to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Io,
    Estimation,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::NodeOutOfRange { .. }
            | Error::EmptyEmbedding
            | Error::Parse { .. } => ErrorClass::Validation,
            Error::Io { .. } | Error::Json(_) => ErrorClass::Io,
            Error::TrajectoryEscape { .. }
            | Error::NonFinite { .. }
            | Error::EmptyCurve { .. }
            | Error::NotEnoughPoints { .. }
            | Error::DegenerateAbscissa
            | Error::NodeInference { .. } => ErrorClass::Estimation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

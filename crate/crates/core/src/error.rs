use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("robot left the map at ({x:.3}, {y:.3})")]
    OutOfBounds { x: f64, y: f64 },

    #[error("no non-rigid cell within [{min_dist}, {max_dist}] m of the robot")]
    NoValidGoal { min_dist: f64, max_dist: f64 },

    #[error("image timestamp {t:.4}s is outside the state/control span")]
    InsufficientOverlap { t: f64 },

    #[error("shape mismatch for `{name}`: expected {expected:?}, got {got:?}")]
    ShapeMismatch { name: String, expected: Vec<usize>, got: Vec<usize> },

    #[error("dataset has {got} samples, at least {need} are required")]
    DatasetTooSmall { got: usize, need: usize },

    #[error("invalid configuration: {path}: {reason}")]
    InvalidConfig { path: String, reason: String },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("malformed tensor file: {0}")]
    TensorFormat(String),

    #[error("empty log: {0}")]
    EmptyLog(String),

    #[error("campaign aborted: {0}")]
    Campaign(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig { path: path.into(), reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

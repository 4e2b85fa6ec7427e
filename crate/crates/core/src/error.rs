use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice spacing must be positive, got {0}")]
    InvalidSpacing(f64),
    #[error("invalid GKP parameters: {0}")]
    InvalidParams(String),
    #[error("code distance must be odd and >= 3, got {0}")]
    InvalidDistance(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("index {index} out of bounds for probability store of length {len}")]
    StoreIndex { index: usize, len: usize },
    #[error("fault produced {count} detection events in one graph (schedule or propagation bug)")]
    TooManyEvents { count: usize },
    #[error("matching failed: {0}")]
    Matching(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

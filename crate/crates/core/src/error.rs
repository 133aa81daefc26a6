//! Error type shared by every module in the toolkit.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad generator/model/run settings.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid or inconsistent data: manifests, labels, argument domains.
    #[error("data error: {0}")]
    Data(String),

    /// Dimension disagreement between tensors, waveforms, or heatmaps.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A computation degenerated (e.g. every heatmap is zero) and no
    /// meaningful result exists.
    #[error("numeric degeneracy: {0}")]
    Degenerate(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for CLI consumers: 2 config, 3 data, 4 degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data(_) | Error::Shape(_) | Error::Io { .. } => 3,
            Error::Degenerate(_) => 4,
        }
    }
}

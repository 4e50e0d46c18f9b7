use std::path::PathBuf;

use thiserror::Error;

/// Errors of the pipeline, file formats and CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("tracking lost at frame {frame}")]
    TrackingLost { frame: usize },
    #[error("frame {frame}: {source}")]
    Core {
        frame: usize,
        #[source]
        source: artfusion_core::Error,
    },
    #[error("missing exports: {}", .0.join(", "))]
    MissingExports(Vec<String>),
    #[error("ground truth mismatch: {0}")]
    Mismatch(String),
}

impl Error {
    /// Process exit code: 2 tracking lost, 3 I/O, 4 config, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TrackingLost { .. } => 2,
            Error::Io { .. } | Error::Format(_) | Error::MissingExports(_) => 3,
            Error::Config(_) => 4,
            Error::Core { .. } | Error::Mismatch(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the reconstruction core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty cluster")]
    EmptyCluster,
    #[error("invalid depth")]
    InvalidDepth,
    #[error("no foreground")]
    NoForeground,
    #[error("no nodes")]
    NoNodes,
    #[error("empty mesh")]
    EmptyMesh,
    #[error("tracking lost")]
    TrackingLost,
    #[error("singular system")]
    SingularSystem,
    #[error("cannot empty cluster")]
    CannotEmptyCluster,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

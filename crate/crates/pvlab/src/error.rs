use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

/// Malformed file content at a byte offset.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("byte {offset}: {message}")]
pub struct FormatError {
    pub offset: usize,
    pub message: String,
}

impl FormatError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        Self { offset, message: message.into() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
}

impl IoError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, source: FormatError) -> Self {
        IoError::Format { path: path.to_path_buf(), source }
    }
}

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum RunError {
    /// A checked property did not hold (exit 1).
    Assertion(String),
    /// The configuration or its arguments are unusable (exit 2).
    Config(String),
    /// Reading or writing files failed (exit 3).
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Assertion(_) => 1,
            RunError::Config(_) => 2,
            RunError::Io(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Assertion(m) => write!(f, "assertion failed: {m}"),
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<IoError> for RunError {
    fn from(e: IoError) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<pvlab_core::Error> for RunError {
    fn from(e: pvlab_core::Error) -> Self {
        use pvlab_core::Error as E;
        match e {
            E::InvalidArgument(_) | E::ShapeMismatch { .. } | E::ResourceLimit(_) => RunError::Config(e.to_string()),
            E::Conditioning { .. } | E::Divergence { .. } | E::GradientCheck { .. } => RunError::Assertion(e.to_string()),
        }
    }
}

use thiserror::Error;

/// Errors raised by the capacity library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapError {
    /// A domain specification could not be meshed.
    #[error("mesh generation failed: {0}")]
    Generation(String),
    /// A mesh violates one of its structural invariants.
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Failure while reading or writing a file.
    #[error("i/o error: {0}")]
    Io(String),
    /// Malformed text input (mesh files, configs).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    /// An experiment finished but one of its property checks failed.
    #[error("check failed: {0}")]
    CheckFailed(String),
}

pub type Result<T> = std::result::Result<T, CapError>;

impl From<std::io::Error> for CapError {
    fn from(err: std::io::Error) -> Self {
        CapError::Io(err.to_string())
    }
}

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CapError::Argument(msg.into()))
}

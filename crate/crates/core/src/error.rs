//! Error type shared across the library.

use std::fmt;
use std::path::PathBuf;

/// Errors produced by motion handling, models, losses and the attack engine.
#[derive(Debug)]
pub enum Error {
    /// A skeleton topology violates a structural invariant.
    InvalidTopology(String),
    /// A motion violates a structural invariant (shape, finiteness, labels).
    InvalidMotion(String),
    /// Two values that must agree in shape do not.
    ShapeMismatch { expected: String, actual: String },
    /// A configuration value is out of its documented range.
    InvalidConfig(String),
    /// A file could not be parsed into a valid artifact.
    Parse { path: PathBuf, message: String },
    /// An I/O failure while reading or writing an artifact.
    Io { path: PathBuf, source: std::io::Error },
    /// Untargeted attack on a sample the victim already misclassifies.
    AlreadyMisclassified { label: usize, predicted: usize },
    /// An operation that needs at least one element received none.
    EmptyInput(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidTopology(msg) => write!(f, "invalid topology: {msg}"),
            Error::InvalidMotion(msg) => write!(f, "invalid motion: {msg}"),
            Error::ShapeMismatch { expected, actual } => {
                write!(f, "shape mismatch: expected {expected}, got {actual}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::Parse { path, message } => {
                write!(f, "parse error in {}: {message}", path.display())
            }
            Error::Io { path, source } => write!(f, "io error on {}: {source}", path.display()),
            Error::AlreadyMisclassified { label, predicted } => write!(
                f,
                "already misclassified: label {label} but victim predicts {predicted}"
            ),
            Error::EmptyInput(msg) => write!(f, "empty input: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

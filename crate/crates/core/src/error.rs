//! Error type shared by all solver modules.

use std::fmt;

/// Errors reported by constructors and solver drivers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A numeric parameter is outside its admissible range.
    InvalidParameter(String),
    /// A solver configuration violates a precondition (rescaling, bounds on
    /// `omega`, `mu`, `lambda`).
    InvalidConfiguration(String),
    /// Two quantities that must share a dimension do not.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A non-finite value appeared during iteration.
    NonFinite { context: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::InvalidConfiguration(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "dimension mismatch for {what}: expected {expected}, got {got}"),
            Error::NonFinite { context } => write!(f, "non-finite value encountered in {context}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
///
/// The variants are coarse on purpose: callers (in particular the CLI)
/// dispatch on the class of failure, not on individual causes.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value is outside the mathematical domain of an operation
    /// (non-finite energy, invalid barrier parameters, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The operation was called incorrectly (dimension mismatch, empty
    /// input, invalid configuration value, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A finite entropy source ran out of words. Never silently recycled.
    #[error("entropy exhausted: {0}")]
    EntropyExhausted(String),

    /// No entropy can be obtained at all (network down and cache empty).
    #[error("entropy unavailable: {0}")]
    EntropyUnavailable(String),

    /// A remote service answered with something other than the expected
    /// payload (malformed JSON, out-of-range word, ...).
    #[error("protocol error: {0}")]
    Protocol(String),

    /// A file could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Parsed data violates a documented invariant (intensity outside
    /// [0,1], weight-dump shape mismatch, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Training produced non-finite weights or outputs.
    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

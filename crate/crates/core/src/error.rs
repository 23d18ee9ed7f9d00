//! Error type shared across the crate.

use thiserror::Error;

/// Convenience alias used by every fallible function in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All the ways corpus handling, model arithmetic, training, and evaluation
/// can fail.
#[derive(Debug, Error)]
pub enum Error {
    /// File-level structural problem: bad header, wrong section order, or
    /// truncated input.
    #[error("format error: {0}")]
    Format(String),

    /// A single malformed data row; `line` is 1-based within the file.
    #[error("row error at line {line}: {msg}")]
    Row { line: usize, msg: String },

    /// The same sample id appeared twice; `line` points at the second
    /// occurrence.
    #[error("duplicate sample id `{id}` at line {line}")]
    Duplicate { id: String, line: usize },

    /// An argument was out of range or otherwise unusable.
    #[error("argument error: {0}")]
    Argument(String),

    /// Mismatched dimensions between values that must agree.
    #[error("shape error: {0}")]
    Shape(String),

    /// A non-finite value turned up where the math requires finite input.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A saved model could not be read back.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// The corpus cannot support the requested batch composition.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// The corpus or split violates a precondition of an evaluation
    /// protocol.
    #[error("protocol error: {0}")]
    Protocol(String),
}

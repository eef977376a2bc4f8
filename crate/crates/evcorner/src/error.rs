//! Crate-wide error type.
//!
//! Stream readers attach the line (text) or record index (binary) plus a byte
//! offset so malformed input can be located exactly.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed content at a known position in an input stream.
    #[error("parse error at line {line}, byte {offset}: {msg}")]
    Parse { line: usize, offset: u64, msg: String },

    /// Event timestamps must be non-decreasing; `line` is the line (text) or
    /// record index (binary) of the offending event.
    #[error("non-monotone timestamp at line {line}: {prev} us followed by {next} us")]
    NonMonotone { line: usize, prev: u64, next: u64 },

    #[error("event ({x},{y}) outside {width}x{height} frame")]
    OutOfFrame { x: u16, y: u16, width: u16, height: u16 },

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid scene: {0}")]
    Scene(String),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed text or header data.
    #[error("parse error: {0}")]
    Parse(String),
    /// Well-formed input the toolkit deliberately does not handle.
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    /// The stream ended in the middle of a record.
    #[error("truncated stream: {0}")]
    TruncatedStream(String),
    /// A caller broke an operation precondition.
    #[error("contract violation: {0}")]
    ContractViolation(String),
    /// Malformed compressed data; `offset` is the byte offset of the fault.
    #[error("bitstream error at byte {offset}: {reason}")]
    Bitstream { offset: usize, reason: String },
    #[error("unsupported bitstream version {0}")]
    UnsupportedVersion(u16),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::ContractViolation(msg.into())
}

pub(crate) fn bitstream(offset: usize, reason: impl Into<String>) -> Error {
    Error::Bitstream {
        offset,
        reason: reason.into(),
    }
}

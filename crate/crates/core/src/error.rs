use alloc::string::String;

/// Error type shared by every module in this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: expected length {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("out-of-order sample for source {source_id} at {timestamp_ms} ms")]
    OutOfOrder { source_id: usize, timestamp_ms: u64 },

    #[error("training failed for zone {zone}: {message}")]
    Training { zone: usize, message: String },

    #[error("no trained model for zone {0}")]
    MissingZone(usize),

    #[error("optimization failed: {0}")]
    Optimization(String),
}

pub type Result<T> = core::result::Result<T, Error>;

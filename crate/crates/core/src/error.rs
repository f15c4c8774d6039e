use thiserror::Error;

/// Errors raised by estimators, detectors and the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("non-finite value {0} in input")]
    NonFinite(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid candidate set: {0}")]
    InvalidCandidate(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("stream exhausted after {available} steps, needed {needed}")]
    StreamExhausted { available: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the aggregation scheme, the protocol roles, and the
/// supporting algebra.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular over the scalar field")]
    SingularMatrix,

    #[error("failed to sample an invertible matrix after {0} attempts")]
    RandomnessExhausted(usize),

    #[error("security level {requested} is not supported by suite {suite}")]
    UnsupportedSecurityLevel { requested: u32, suite: &'static str },

    #[error("client id {0} was already issued a key")]
    DuplicateClient(String),

    #[error("client id {0} has no issued key")]
    UnknownClient(String),

    #[error("coordinate {index} has value {value}, outside the {bits}-bit quantization range")]
    CoordinateOutOfRange { index: usize, value: u64, bits: u32 },

    #[error("unmask participant set does not match the submitted ciphertexts")]
    ParticipantSetMismatch,

    #[error("ciphertext set is inconsistent: {0}")]
    CipherSetMismatch(String),

    #[error("no discrete log below bound {bound}")]
    DlogNotFound { bound: u64 },

    #[error("aggregate value {value} at coordinate {index} exceeds the range for {k_prime} participants")]
    ParticipantCountMismatch { index: usize, value: u64, k_prime: u32 },

    #[error("all participation frequencies are zero at round {0}")]
    AllZeroFrequencies(u64),

    #[error("training loss became non-finite (learning rate misconfigured?)")]
    NonFiniteLoss,

    #[error("test set has no samples for class {0}")]
    EmptyTestClass(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("decode error: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

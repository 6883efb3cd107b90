use thiserror::Error;

/// Errors produced by the correlated-noise library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tree depth {depth} outside the supported range {min}..={max}")]
    DepthOutOfRange { depth: u32, min: u32, max: u32 },

    #[error("noise scale must be finite and positive, got {0}")]
    InvalidSigma(f64),

    #[error("privacy budget out of range: {0}")]
    InvalidBudget(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} is not a positive power of two")]
    NotPowerOfTwo(usize),

    #[error("range [{lo}, {hi}] invalid for {n} elements")]
    RangeOutOfBounds { lo: usize, hi: usize, n: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error("data vector contains a non-finite value at index {0}")]
    NonFiniteData(usize),

    #[error("workload of size {0} exceeds the dense limit")]
    WorkloadTooLarge(usize),

    #[error("decode error: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the modem, channel, estimator and simulation modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is singular or ill-conditioned (pivot {pivot:e} at index {index})")]
    IllConditioned { index: usize, pivot: f64 },
    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("negative variance {0}")]
    NegativeVariance(f64),
    #[error("bit sequence length {len} is not a multiple of {bits_per_symbol}")]
    RaggedBits { len: usize, bits_per_symbol: usize },
    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(u8),
    #[error("guard length {guard} exceeds FFT size {fft_size}")]
    GuardTooLong { guard: usize, fft_size: usize },
    #[error("near-zero channel estimate {magnitude:e} on carrier {carrier}")]
    NearZeroChannel { carrier: usize, magnitude: f64 },
    #[error("near-zero pilot symbol {magnitude:e} on carrier {carrier}")]
    NearZeroPilot { carrier: usize, magnitude: f64 },
    #[error("tap delay {delay} exceeds guard length {guard} (inter-symbol interference)")]
    DelayExceedsGuard { delay: usize, guard: usize },
    #[error("invalid channel model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("rank {rank} outside 1..={dim}")]
    RankOutOfRange { rank: usize, dim: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown estimator {0:?}")]
    UnknownEstimator(String),
    #[error("empty cell: no channel-error samples accumulated")]
    EmptyCell,
    #[error("{cell}: {source}")]
    InCell {
        cell: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by estimators, theory formulas and experiment runners.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("sample too small: need at least {required} observations, got {actual}")]
    SampleTooSmall { required: usize, actual: usize },

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("degenerate kernel: |f'({argument})| = {value:e} is below the admissible threshold")]
    DegenerateKernel { argument: f64, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input")]
    EmptyInput,

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

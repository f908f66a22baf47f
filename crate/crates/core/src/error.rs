use thiserror::Error;

/// Errors raised by kernel assembly, sampling and the trajectory solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("bath has no mode with C1 != C2")]
    EmptyBath,

    #[error("bad frequency/time truncation: {0}")]
    BadTruncation(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("boundary-value system is near singular (normalized condition estimate {condition:.3e})")]
    NearSingularBvp { condition: f64 },

    #[error("denominator underflow at node {node} (|value| = {value:.3e})")]
    DenominatorUnderflow { node: usize, value: f64 },

    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

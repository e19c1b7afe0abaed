use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("integer overflow in group arithmetic")]
    Overflow,

    #[error("{what} = {requested} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range 0..={len}")]
    OutOfRange { index: usize, len: usize },

    #[error("word lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("vertex {0} is not in the box")]
    NotInBox(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimate {estimate:e}) after {panels} panels")]
    Quadrature {
        tolerance: f64,
        estimate: f64,
        panels: usize,
    },

    #[error("linear solver stopped after {iterations} iterations at relative residual {residual:e}")]
    SolverDidNotConverge { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

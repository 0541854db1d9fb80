use thiserror::Error;

/// Errors raised by the structured algorithms.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symmetric (residual {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not skew-symmetric (residual {0:.3e})")]
    NotSkewSymmetric(f64),
    #[error("spectrum violates the precondition: {0}")]
    SpectrumViolation(String),
    #[error("pair is not a Lagrange pair (residual {0:.3e})")]
    NotLagrange(f64),
    #[error("pair is not a Dirac pair (residual {0:.3e})")]
    NotDirac(f64),
    #[error("system is not structured: {0}")]
    NotStructured(String),
    #[error("pencil is not regular")]
    NotRegular,
    #[error("index {0} exceeds two")]
    IndexTooHigh(usize),
    #[error("pencil is not equivalent to a dH pencil: {0}")]
    NotEquivalent(String),
    #[error("(C, D) is not a maximal annihilator of a monotone pair: {0}")]
    NotAnnihilator(String),
    #[error("frame requires an invertible {0}")]
    SingularFrame(&'static str),
    #[error("{0} is singular")]
    Singular(&'static str),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

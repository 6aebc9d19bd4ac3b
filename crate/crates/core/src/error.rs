use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// Variants are grouped so that front ends can map them onto stable exit
/// codes: shape and parse problems, non-unitary input, and precondition
/// failures of the individual applications.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry length {got} does not match {rows}x{cols}")]
    LengthMismatch {
        rows: usize,
        cols: usize,
        got: usize,
    },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("vector has zero norm")]
    ZeroNorm,

    #[error("matrix is not unitary (max deviation {deviation:.3e} > tol {tol:.3e})")]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("eigensolver residual {residual:.3e} exceeds limit {limit:.3e}")]
    EigenResidual { residual: f64, limit: f64 },

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("bases are not independent (rank {rank}, need {needed})")]
    DependentBases { rank: usize, needed: usize },

    #[error("resource budget exceeded: {0}")]
    Budget(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

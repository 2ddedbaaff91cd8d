use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {0:?} lies outside the state space")]
    OutsideStateSpace(Vec<f64>),
    #[error("instance too large for the exact solver: {0}")]
    TooLarge(String),
    #[error("no sign change in bracket [{0}, {1}]")]
    NoSignChange(f64, f64),
    #[error("baseline model admits arbitrage")]
    Arbitrage,
    #[error("wealth range incompatible with the utility domain: {0}")]
    Incompatible(String),
    #[error("optimizer lies on the boundary of the action space")]
    BoundaryOptimum,
    #[error("optimizer is zero; use the degenerate branch")]
    ZeroOptimizer,
    #[error("hessian is not negative definite")]
    IndefiniteHessian,
    #[error("degenerate sensitivity: {0}")]
    Degenerate(String),
    #[error("wealth {0} left the utility domain")]
    OutsideDomain(f64),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Assumption,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::OutsideStateSpace(_)
            | Error::TooLarge(_)
            | Error::NoSignChange(..) => ErrorKind::Input,
            Error::Arbitrage
            | Error::Incompatible(_)
            | Error::BoundaryOptimum
            | Error::ZeroOptimizer
            | Error::IndefiniteHessian
            | Error::Degenerate(_) => ErrorKind::Assumption,
            Error::OutsideDomain(_) | Error::NoConvergence(_) | Error::Numerical(_) => {
                ErrorKind::Numerical
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

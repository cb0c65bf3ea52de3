use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("stage union assumption violated: stages {missing:?} are reducible in both underlying methods")]
    AssumptionViolation { missing: Vec<usize> },

    #[error("explicit base method must have classical order >= {required}, found {found}")]
    OrderPrerequisite { required: usize, found: usize },

    #[error("degenerate coefficient: {0}")]
    DegenerateCoefficient(String),

    #[error("tensor is not diagonally implicit in the IMEX sense: a[{i}][{j}][{k}] = {value}")]
    NonImexTensor { i: usize, j: usize, k: usize, value: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("stability denominator vanished (|Q| = {0:e})")]
    SingularDenominator(f64),

    #[error("fitted degree {fitted} for {what} is not within 0.05 of an integer")]
    DegreeMismatch { what: String, fitted: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("non-finite state encountered at step {0}")]
    NonFinite(usize),

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that come from the numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NewtonDivergence { .. }
                | Error::SingularDenominator(_)
                | Error::DegreeMismatch { .. }
                | Error::SolveFailure(_)
                | Error::NonFinite(_)
                | Error::DegenerateCoefficient(_)
        )
    }
}

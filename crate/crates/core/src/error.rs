use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("grid of {cells} cells exceeds the factorization budget of {max} cells")]
    GridTooLarge { cells: usize, max: usize },
    #[error("location ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("no pairs within the cutoff distance")]
    NoPairs,
    #[error("non-positive conditional variance at ordered position {position}")]
    DegenerateConditional { position: usize },
    #[error("cluster process produced fewer than {target} points after {attempts} attempts")]
    RetryBudgetExhausted { target: usize, attempts: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("state constraint violated: {0}")]
    StateConstraint(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("quadrature did not converge: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by rule construction, feature maps and the analysis harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("integration did not reach tolerance {tol:e} (estimated error {estimate:e}) after {evaluations} evaluations")]
    Convergence {
        tol: f64,
        estimate: f64,
        evaluations: usize,
    },

    #[error("tridiagonal eigensolver did not converge after {0} iterations")]
    EigenSolver(usize),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("negative weight {weight} at frequency {index}; signed-weight maps must use gram_hat or kappa_hat")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

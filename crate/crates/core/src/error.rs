use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariance is not positive definite: Cholesky factorization failed")]
    CholeskyFailed,

    /// A constraint row with zero normal and negative offset can never be
    /// satisfied, so the feasible set is empty.
    #[error("constraint{} has a zero normal and a negative offset: the feasible set is empty", fmt_row(.row))]
    InvalidConstraint { row: Option<usize> },

    /// The current point violates a constraint beyond tolerance, so the
    /// active-interval construction is undefined. The sampler converts this
    /// into a safeguard rejection instead of propagating it.
    #[error("current point violates a constraint beyond tolerance")]
    InfeasibleCurrentPoint,

    #[error("duplicate intersection angles: likelihood testing requires distinct angles")]
    DuplicateAngles,

    #[error("interval set has zero total length: cannot sample an angle")]
    EmptyIntervalSet,

    #[error(
        "start point is not strictly feasible: constraint {constraint} has residual {residual:e}"
    )]
    InfeasibleStart { constraint: usize, residual: f64 },

    #[error("truncation interval carries no representable probability mass")]
    UnderflowingMass,

    #[error("estimated acceptance probability {estimated:e} is below 1e-3")]
    AcceptanceTooLow { estimated: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_row(row: &Option<usize>) -> String {
    match row {
        Some(i) => format!(" {i}"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

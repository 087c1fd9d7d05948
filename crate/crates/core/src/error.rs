//! Error types shared across the crate.

use thiserror::Error;

use crate::banded::MMatrixViolation;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("singular pivot at row {row}: |{pivot:e}| is below the elimination threshold")]
    SingularPivot { row: usize, pivot: f64 },

    #[error("{context}: {violation}")]
    NotMMatrix {
        context: String,
        violation: MMatrixViolation,
    },

    #[error(
        "positive row sums are not co-located: control {control} has them at rows {actual:?}, \
         control 0 at rows {expected:?}"
    )]
    RowSumLocationMismatch {
        control: usize,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires a min-form problem; convert max-form problems first")]
    MinSenseRequired,

    #[error("operation requires a max-form problem")]
    MaxSenseRequired,

    #[error("discretisation row {row} is not monotone: {detail}")]
    NonMonotoneRow { row: usize, detail: String },

    #[error("enumeration guard exceeded: {combinations:.3e} control assignments (limit {limit:e})")]
    EnumerationGuardExceeded { combinations: f64, limit: f64 },

    #[error("no control assignment yields a verifying solution; the system is ill-posed")]
    NoVerifyingAssignment,

    #[error(
        "distinct verifying solutions found (max deviation {max_deviation:e}); the system is ill-posed"
    )]
    AmbiguousSolution { max_deviation: f64 },

    #[error(
        "solver hit the iteration cap while computing time level {level}: {iterations} iterations, \
         scaled residual {residual:e}"
    )]
    IterationCap {
        level: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("payoff must vanish at S=0 and S=S_max; sampled endpoints are {left:e} and {right:e}")]
    PayoffBoundary { left: f64, right: f64 },
}

//! Shared outcome type for the iterative solvers.

/// Why an iterative solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The scaled residual criterion passed, or an exact fixed point was hit.
    Converged,
    /// The iteration cap was reached first.
    CapExceeded,
}

/// Solution vector plus the iteration trace.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub x: Vec<f64>,
    /// Number of linear solves performed.
    pub iterations: usize,
    /// Unscaled infinity-norm residual after each iteration.
    pub residual_trace: Vec<f64>,
    /// The iterates x^1, x^2, ... in order; the last one equals `x`.
    pub iterates: Vec<Vec<f64>>,
    pub termination: Termination,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

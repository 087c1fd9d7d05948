//! Policy iteration (Howard's method) for the discrete min-form system.
//!
//! Each pass selects, per row, the control minimising the residual
//! `(A_s x - b_s)_i`, row-splices the chosen matrices and right-hand sides
//! into a composite system, and performs one direct solve. The iterates are
//! non-decreasing from the second one on and only finitely many composites
//! exist, so the method terminates finitely. It serves as the reference
//! solver the penalty scheme is measured against.

use crate::error::{Error, Result};
use crate::problem::{ControlProblem, Sense};
use crate::report::{SolveReport, Termination};

/// State after one policy-iteration pass.
#[derive(Debug, Clone)]
pub struct PolicyIterate {
    pub x: Vec<f64>,
    /// Per-row index of the chosen control.
    pub policy: Vec<usize>,
    pub iter: usize,
}

/// Chooses, for every row, the lowest-index control minimising
/// `(A_s x - b_s)_i`.
pub fn select_policy(p: &ControlProblem, x: &[f64]) -> Result<Vec<usize>> {
    let residual = p.residual(x)?;
    let mut policy = vec![0usize; p.dim()];
    for (i, choice) in policy.iter_mut().enumerate() {
        let mut best = residual.per_control[0][i];
        for s in 1..p.num_controls() {
            let value = residual.per_control[s][i];
            if value < best {
                best = value;
                *choice = s;
            }
        }
    }
    Ok(policy)
}

/// Solves the min-form system by policy iteration from `x0`.
///
/// After every solve the fresh iterate is verified with the two-sided
/// criterion at relative tolerance `tol`; an exact repeat of the previous
/// iterate (the finite-termination fixed point) also ends the iteration.
pub fn solve_policy(
    p: &ControlProblem,
    tol: f64,
    max_iters: usize,
    x0: &[f64],
) -> Result<SolveReport> {
    if p.sense() != Sense::Min {
        return Err(Error::MinSenseRequired);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("termination tolerance must be > 0".into()));
    }
    if max_iters == 0 {
        return Err(Error::InvalidParameter("iteration cap must be >= 1".into()));
    }
    if x0.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "policy starting value",
            expected: p.dim(),
            actual: x0.len(),
        });
    }

    let mut x_prev = x0.to_vec();
    let mut trace = Vec::new();
    let mut iterates = Vec::new();

    for n in 1..=max_iters {
        let policy = select_policy(p, &x_prev)?;
        let (a_star, b_star) = p.spliced_system(&policy)?;
        let x = a_star.solve(&b_star)?;

        let residual = p.residual(&x)?;
        trace.push(residual.envelope_inf_norm());
        iterates.push(x.clone());

        let verification = p.verify_solution(&x, tol)?;
        if verification.ok || x == x_prev {
            return Ok(SolveReport {
                x,
                iterations: n,
                residual_trace: trace,
                iterates,
                termination: Termination::Converged,
            });
        }
        x_prev = x;
    }

    Ok(SolveReport {
        x: x_prev,
        iterations: max_iters,
        residual_trace: trace,
        iterates,
        termination: Termination::CapExceeded,
    })
}

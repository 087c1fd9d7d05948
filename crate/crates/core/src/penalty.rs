//! Penalty approximation of the discrete min-form system and the
//! finite-termination iteration that solves it exactly.
//!
//! For a reference control s0 and intensity rho > 0, the penalised system is
//!
//! ```text
//! G(x) = (A_{s0} x - b_{s0}) - rho * sum_{s != s0} max{b_s - A_s x, 0} = 0,
//! ```
//!
//! whose solution differs from the original system's by O(1/rho). Each
//! iteration masks, per non-reference control, the rows where `b_s - A_s x`
//! is strictly positive, assembles the composite matrix
//! `A_{s0} + rho * sum A_s^masked`, and performs one direct solve:
//!
//! ```text
//! (A_{s0} + rho * sum A_s^masked) x_next = b_{s0} + rho * sum b_s^masked.
//! ```
//!
//! The iterates are non-decreasing from the second one on and only finitely
//! many mask patterns exist, so the iteration reaches an exact fixed point in
//! finitely many steps regardless of the starting value.

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::problem::{ControlProblem, Sense};
use crate::report::{SolveReport, Termination};

/// Settings of a penalised solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    /// Penalty intensity rho > 0.
    pub rho: f64,
    /// Index of the reference control whose equation is enforced exactly.
    pub reference_control: usize,
    /// Relative termination tolerance.
    pub tol: f64,
    /// Iteration cap; hitting it is reported, not thrown.
    pub max_iters: usize,
    /// Mask rows on strict positivity of `b_s - A_s x` (ties excluded).
    pub strict_mask: bool,
}

impl PenaltyConfig {
    pub fn new(rho: f64) -> Self {
        Self {
            rho,
            reference_control: 0,
            tol: 1e-8,
            max_iters: 100,
            strict_mask: true,
        }
    }

    pub fn with_reference_control(mut self, s: usize) -> Self {
        self.reference_control = s;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self, p: &ControlProblem) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::InvalidParameter("penalty intensity rho must be > 0".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("termination tolerance must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("iteration cap must be >= 1".into()));
        }
        if self.reference_control >= p.num_controls() {
            return Err(Error::InvalidParameter(format!(
                "reference control {} out of range (have {})",
                self.reference_control,
                p.num_controls()
            )));
        }
        Ok(())
    }
}

/// State after one iteration: the iterate, its own masks and residual.
#[derive(Debug, Clone)]
pub struct PenaltyIterate {
    pub x: Vec<f64>,
    /// `masks[s][i]` marks rows where `(b_s - A_s x)_i` is positive; the
    /// reference control's entry stays all-false.
    pub masks: Vec<Vec<bool>>,
    /// `G(x)` evaluated at this iterate.
    pub g_residual: Vec<f64>,
    /// Number of direct solves performed since the starting value.
    pub iter: usize,
}

/// Masks and residual of a point, computed in one pass.
fn evaluate(p: &ControlProblem, cfg: &PenaltyConfig, x: &[f64]) -> Result<(Vec<Vec<bool>>, Vec<f64>)> {
    if x.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "penalty evaluation point",
            expected: p.dim(),
            actual: x.len(),
        });
    }
    let s0 = cfg.reference_control;
    let n = p.dim();
    let mut g: Vec<f64> = (0..n)
        .map(|i| p.matrix(s0).row_dot(i, x) - p.rhs(s0)[i])
        .collect();
    let mut masks = Vec::with_capacity(p.num_controls());
    for s in 0..p.num_controls() {
        if s == s0 {
            masks.push(vec![false; n]);
            continue;
        }
        let mut mask = vec![false; n];
        for (i, (flag, g_i)) in mask.iter_mut().zip(g.iter_mut()).enumerate() {
            let slack = p.rhs(s)[i] - p.matrix(s).row_dot(i, x);
            *flag = if cfg.strict_mask { slack > 0.0 } else { slack >= 0.0 };
            if slack > 0.0 {
                *g_i -= cfg.rho * slack;
            }
        }
        masks.push(mask);
    }
    Ok((masks, g))
}

/// The penalised residual `G(x)`.
pub fn penalty_residual(p: &ControlProblem, cfg: &PenaltyConfig, x: &[f64]) -> Result<Vec<f64>> {
    cfg.validate(p)?;
    Ok(evaluate(p, cfg, x)?.1)
}

/// Row masks of `x` for every non-reference control.
pub fn compute_masks(p: &ControlProblem, cfg: &PenaltyConfig, x: &[f64]) -> Result<Vec<Vec<bool>>> {
    cfg.validate(p)?;
    Ok(evaluate(p, cfg, x)?.0)
}

/// Assembles the iteration matrix `A_{s0} + rho * sum_{s != s0} A_s^masked`,
/// where a masked matrix keeps row i exactly when `masks[s][i]` holds. Adding
/// rows of the other M-matrices preserves the M-matrix structure.
pub fn build_jacobian(
    p: &ControlProblem,
    cfg: &PenaltyConfig,
    masks: &[Vec<bool>],
) -> Result<BandedMatrix> {
    cfg.validate(p)?;
    check_mask_shape(p, masks)?;
    let mut out = p.matrix(cfg.reference_control).clone();
    for (s, mask) in masks.iter().enumerate() {
        if s == cfg.reference_control {
            continue;
        }
        for (i, &row_active) in mask.iter().enumerate() {
            if row_active {
                out.add_scaled_row(i, cfg.rho, p.matrix(s));
            }
        }
    }
    Ok(out)
}

fn check_mask_shape(p: &ControlProblem, masks: &[Vec<bool>]) -> Result<()> {
    if masks.len() != p.num_controls() {
        return Err(Error::DimensionMismatch {
            context: "mask count",
            expected: p.num_controls(),
            actual: masks.len(),
        });
    }
    for m in masks {
        if m.len() != p.dim() {
            return Err(Error::DimensionMismatch {
                context: "mask length",
                expected: p.dim(),
                actual: m.len(),
            });
        }
    }
    Ok(())
}

/// One solve of the masked system built from the masks of `x`.
fn step(p: &ControlProblem, cfg: &PenaltyConfig, masks: &[Vec<bool>]) -> Result<Vec<f64>> {
    let s0 = cfg.reference_control;
    let jacobian = build_jacobian(p, cfg, masks)?;
    let mut rhs: Vec<f64> = p.rhs(s0).to_vec();
    for (s, mask) in masks.iter().enumerate() {
        if s == s0 {
            continue;
        }
        for (i, (&row_active, slot)) in mask.iter().zip(rhs.iter_mut()).enumerate() {
            if row_active {
                *slot += cfg.rho * p.rhs(s)[i];
            }
        }
    }
    jacobian.solve(&rhs)
}

/// Performs a single iteration from `x_prev`: masks of `x_prev` drive the
/// direct solve, and the returned iterate carries its own masks and residual.
pub fn iterate(p: &ControlProblem, cfg: &PenaltyConfig, x_prev: &[f64]) -> Result<PenaltyIterate> {
    cfg.validate(p)?;
    let (masks_prev, _) = evaluate(p, cfg, x_prev)?;
    let x = step(p, cfg, &masks_prev)?;
    let (masks, g_residual) = evaluate(p, cfg, &x)?;
    Ok(PenaltyIterate { x, masks, g_residual, iter: 1 })
}

/// Solves the penalised system by repeated masked solves from `x0`.
///
/// Convergence is declared when the scaled residual
/// `||G(x)||_inf / max(||max{b_s}||_inf, 1)` drops to `cfg.tol`, or when two
/// consecutive iterates coincide exactly (the finite-termination fixed
/// point, which the scaled test may fail to resolve for very large rho).
pub fn solve_penalised(p: &ControlProblem, cfg: &PenaltyConfig, x0: &[f64]) -> Result<SolveReport> {
    cfg.validate(p)?;
    if p.sense() != Sense::Min {
        return Err(Error::MinSenseRequired);
    }
    if x0.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "penalty starting value",
            expected: p.dim(),
            actual: x0.len(),
        });
    }

    let scale = p.termination_scale();
    let (mut masks, _) = evaluate(p, cfg, x0)?;
    let mut x_prev = x0.to_vec();
    let mut trace = Vec::new();
    let mut iterates = Vec::new();

    for n in 1..=cfg.max_iters {
        let x = step(p, cfg, &masks)?;
        let (masks_next, g) = evaluate(p, cfg, &x)?;
        let g_norm = inf_norm(&g);
        trace.push(g_norm);
        iterates.push(x.clone());

        let fixed_point = x == x_prev;
        if g_norm <= cfg.tol * scale || fixed_point {
            return Ok(SolveReport {
                x,
                iterations: n,
                residual_trace: trace,
                iterates,
                termination: Termination::Converged,
            });
        }
        masks = masks_next;
        x_prev = x;
    }

    Ok(SolveReport {
        x: x_prev,
        iterations: cfg.max_iters,
        residual_trace: trace,
        iterates,
        termination: Termination::CapExceeded,
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::BandedMatrix;

    /// N=1, A0 = [1], b0 = [0], A1 = [1], b1 = [1]; the penalised solution
    /// is x = rho / (1 + rho).
    fn scalar_problem() -> ControlProblem {
        ControlProblem::new(
            vec!["s0".into(), "s1".into()],
            vec![BandedMatrix::identity(1), BandedMatrix::identity(1)],
            vec![vec![0.0], vec![1.0]],
            Sense::Min,
        )
        .unwrap()
    }

    #[test]
    fn residual_without_penalty_terms_is_linear() {
        let p = ControlProblem::new(
            vec!["s0".into()],
            vec![BandedMatrix::identity(2)],
            vec![vec![0.0, 0.0]],
            Sense::Min,
        )
        .unwrap();
        let g = penalty_residual(&p, &PenaltyConfig::new(1e4), &[0.0, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn scalar_residual_at_zero() {
        let p = scalar_problem();
        let g = penalty_residual(&p, &PenaltyConfig::new(1e4), &[0.0]).unwrap();
        assert_eq!(g, vec![-1e4]);
    }

    #[test]
    fn scalar_residual_vanishes_at_closed_form() {
        let p = scalar_problem();
        let rho = 1e4;
        let x = rho / (1.0 + rho);
        let g = penalty_residual(&p, &PenaltyConfig::new(rho), &[x]).unwrap();
        assert!(g[0].abs() <= 1e-12, "residual {:e}", g[0]);
    }

    #[test]
    fn jacobian_with_all_masks_false_is_reference_matrix() {
        let p = scalar_problem();
        let cfg = PenaltyConfig::new(1e4);
        let masks = vec![vec![false], vec![false]];
        let j = build_jacobian(&p, &cfg, &masks).unwrap();
        assert_eq!(j, BandedMatrix::identity(1));
    }

    #[test]
    fn jacobian_with_scalar_mask_set() {
        let p = scalar_problem();
        let cfg = PenaltyConfig::new(1e4);
        let masks = vec![vec![false], vec![true]];
        let j = build_jacobian(&p, &cfg, &masks).unwrap();
        assert_eq!(j.diag(), &[1.0 + 1e4]);
    }

    #[test]
    fn strict_mask_excludes_ties() {
        let p = scalar_problem();
        let cfg = PenaltyConfig::new(1e4);
        // At x = 1 the slack b1 - x is exactly zero: excluded by the strict mask.
        let masks = compute_masks(&p, &cfg, &[1.0]).unwrap();
        assert_eq!(masks[1], vec![false]);
        let j = build_jacobian(&p, &cfg, &masks).unwrap();
        assert_eq!(j.diag(), &[1.0]);

        let loose = PenaltyConfig { strict_mask: false, ..cfg };
        let masks = compute_masks(&p, &loose, &[1.0]).unwrap();
        assert_eq!(masks[1], vec![true]);
    }

    #[test]
    fn iterate_scalar_from_zero() {
        let p = scalar_problem();
        let rho = 1e4;
        let cfg = PenaltyConfig::new(rho);
        let it = iterate(&p, &cfg, &[0.0]).unwrap();
        assert_eq!(it.x, vec![rho / (1.0 + rho)]);

        // Mask unchanged at the new point, so the next solve reproduces it.
        let it2 = iterate(&p, &cfg, &it.x).unwrap();
        assert_eq!(it2.x, it.x);
    }

    #[test]
    fn single_control_converges_in_one_solve() {
        let a = BandedMatrix::tridiagonal(vec![-1.0], vec![2.0, 2.0], vec![-1.0]).unwrap();
        let p = ControlProblem::new(
            vec!["s0".into()],
            vec![a.clone()],
            vec![vec![1.0, 1.0]],
            Sense::Min,
        )
        .unwrap();
        let report = solve_penalised(&p, &PenaltyConfig::new(1e4), &[5.0, -7.0]).unwrap();
        assert!(report.converged());
        assert!(report.iterations <= 2);
        let direct = a.solve(&[1.0, 1.0]).unwrap();
        assert_eq!(report.x, direct);
    }

    #[test]
    fn scalar_solve_reaches_closed_form() {
        let p = scalar_problem();
        let rho = 1e4;
        let report = solve_penalised(&p, &PenaltyConfig::new(rho), &[0.0]).unwrap();
        assert!(report.converged());
        assert!(report.iterations <= 2);
        assert!((report.x[0] - rho / (1.0 + rho)).abs() < 1e-12);
        assert!((report.x[0] - 0.99990001).abs() < 1e-8);
    }

    #[test]
    fn penalty_term_vanishes_at_unconstrained_solution() {
        // The oracle instance: at x = (1,1) the slack b1 - A1 x is negative,
        // so G reduces to the reference equation and x solves it exactly.
        let a0 = BandedMatrix::tridiagonal(vec![-1.0], vec![2.0, 2.0], vec![-1.0]).unwrap();
        let a1 = BandedMatrix::identity(2);
        let p = ControlProblem::new(
            vec!["s0".into(), "s1".into()],
            vec![a0, a1],
            vec![vec![1.0, 1.0], vec![0.3, 0.2]],
            Sense::Min,
        )
        .unwrap();
        for rho in [1.0, 1e2, 1e6] {
            let report = solve_penalised(&p, &PenaltyConfig::new(rho), &[0.0, 0.0]).unwrap();
            assert!(report.converged());
            assert!((report.x[0] - 1.0).abs() < 1e-10, "rho={rho}");
            assert!((report.x[1] - 1.0).abs() < 1e-10, "rho={rho}");
        }
    }

    #[test]
    fn cap_exceeded_is_reported_not_thrown() {
        let p = scalar_problem();
        let cfg = PenaltyConfig { max_iters: 1, tol: 1e-30, ..PenaltyConfig::new(1e4) };
        // One iteration cannot both move and re-confirm the fixed point at
        // an unreachable tolerance; expect a reported cap.
        let report = solve_penalised(&p, &cfg, &[-5.0]).unwrap();
        assert_eq!(report.termination, Termination::CapExceeded);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn rejects_max_sense() {
        let p = ControlProblem::new(
            vec!["s0".into()],
            vec![BandedMatrix::identity(1)],
            vec![vec![0.0]],
            Sense::Max,
        )
        .unwrap();
        assert!(matches!(
            solve_penalised(&p, &PenaltyConfig::new(1e4), &[0.0]),
            Err(Error::MinSenseRequired)
        ));
    }

    #[test]
    fn rejects_bad_config() {
        let p = scalar_problem();
        assert!(solve_penalised(&p, &PenaltyConfig::new(-1.0), &[0.0]).is_err());
        assert!(solve_penalised(&p, &PenaltyConfig::new(1e4).with_reference_control(2), &[0.0]).is_err());
    }
}

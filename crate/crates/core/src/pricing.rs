//! Backward time stepping for the discretised pricing problem.
//!
//! Starting from the payoff at maturity, each step solves the min-form
//! system `min{A_s V^{j-1} - V^j : s} = 0` with the matrices of the four
//! borrowing/lending controls and the previous time level as every control's
//! right-hand side. The matrices are time-independent and assembled once;
//! the nonlinear solve is warm-started from the previous level.

use std::time::{Duration, Instant};

use crate::blackscholes::{
    Grid, MarketParams, PiecewiseLinearPayoff, borrow_lend_controls, bs_matrix, control_label,
    sample_payoff,
};
use crate::error::{Error, Result};
use crate::penalty::{PenaltyConfig, solve_penalised};
use crate::policy::solve_policy;
use crate::problem::{ControlProblem, Sense};
use crate::report::{SolveReport, Termination};
use crate::banded::BandedMatrix;

/// Which nonlinear solver drives the stepping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Penalty,
    Policy,
}

/// Per-run solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingConfig {
    pub solver: SolverKind,
    /// Penalty intensity; ignored by the policy solver.
    pub rho: f64,
    /// Reference control for the penalty solver.
    pub reference_control: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Keep the full per-step solve reports (iterates and residual traces).
    pub keep_reports: bool,
}

impl PricingConfig {
    pub fn penalty(rho: f64) -> Self {
        Self {
            solver: SolverKind::Penalty,
            rho,
            reference_control: 0,
            tol: 1e-8,
            max_iters: 100,
            keep_reports: false,
        }
    }

    pub fn policy() -> Self {
        Self {
            solver: SolverKind::Policy,
            rho: 0.0,
            reference_control: 0,
            tol: 1e-8,
            max_iters: 100,
            keep_reports: false,
        }
    }

    pub fn with_reports(mut self) -> Self {
        self.keep_reports = true;
        self
    }
}

/// Statistics of one backward step.
#[derive(Debug, Clone, Copy)]
pub struct StepStat {
    /// Time level that was computed (the step solved for `V^{level}`).
    pub level: usize,
    pub iterations: usize,
    pub wall_time: Duration,
}

/// A completed pricing run: the full value surface plus per-step statistics.
#[derive(Debug, Clone)]
pub struct PricingRun {
    pub market: MarketParams,
    pub grid: Grid,
    pub config: PricingConfig,
    /// `surface[j]` is the value vector at time level j; the last row is the
    /// sampled payoff.
    pub surface: Vec<Vec<f64>>,
    /// One entry per backward step, in solve order (from maturity down).
    pub steps: Vec<StepStat>,
    /// Per-step solve reports when `keep_reports` was set, in solve order.
    pub step_reports: Option<Vec<SolveReport>>,
}

impl PricingRun {
    /// Value profile at time zero.
    pub fn time_zero(&self) -> &[f64] {
        &self.surface[0]
    }

    pub fn total_wall_time(&self) -> Duration {
        self.steps.iter().map(|s| s.wall_time).sum()
    }

    pub fn iteration_counts(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.iterations).collect()
    }
}

/// Builds the per-step min-form problem template for the given market and
/// grid: the four control matrices with placeholder right-hand sides.
pub fn step_problem_template(market: &MarketParams, grid: &Grid) -> Result<ControlProblem> {
    let controls = borrow_lend_controls(market);
    let labels = controls.iter().map(|&(r, q)| control_label(r, q)).collect();
    let matrices = controls
        .iter()
        .map(|&(r, q)| bs_matrix(r, q, market.sigma, grid))
        .collect::<Result<Vec<_>>>()?;
    let zeros = vec![vec![0.0; grid.space_nodes]; controls.len()];
    ControlProblem::new(labels, matrices, zeros, Sense::Min)
}

/// Marches the pricing problem backward from the payoff.
///
/// The sampled payoff must vanish at both grid endpoints; the identity
/// boundary rows then hold those Dirichlet values at every level. A solver
/// that hits its iteration cap aborts the run with the offending level.
pub fn price(
    market: &MarketParams,
    grid: &Grid,
    payoff: &PiecewiseLinearPayoff,
    config: &PricingConfig,
) -> Result<PricingRun> {
    let terminal = sample_payoff(payoff, grid);
    price_from_terminal(market, grid, &terminal, config)
}

/// As `price`, but starting from an already sampled terminal value vector.
pub fn price_from_terminal(
    market: &MarketParams,
    grid: &Grid,
    terminal: &[f64],
    config: &PricingConfig,
) -> Result<PricingRun> {
    let n = grid.space_nodes;
    if terminal.len() != n {
        return Err(Error::DimensionMismatch {
            context: "terminal value vector",
            expected: n,
            actual: terminal.len(),
        });
    }
    if terminal[0] != 0.0 || terminal[n - 1] != 0.0 {
        return Err(Error::PayoffBoundary {
            left: terminal[0],
            right: terminal[n - 1],
        });
    }

    let template = step_problem_template(market, grid)?;
    let num_controls = template.num_controls();
    let levels = grid.time_levels;

    let mut surface = vec![Vec::new(); levels];
    surface[levels - 1] = terminal.to_vec();
    let mut steps = Vec::with_capacity(levels - 1);
    let mut reports = config.keep_reports.then(Vec::new);

    for j in (1..levels).rev() {
        let previous = surface[j].clone();
        let problem = template.with_rhs(vec![previous.clone(); num_controls])?;

        let started = Instant::now();
        let report = match config.solver {
            SolverKind::Penalty => {
                let cfg = PenaltyConfig {
                    rho: config.rho,
                    reference_control: config.reference_control,
                    tol: config.tol,
                    max_iters: config.max_iters,
                    strict_mask: true,
                };
                solve_penalised(&problem, &cfg, &previous)?
            }
            SolverKind::Policy => solve_policy(&problem, config.tol, config.max_iters, &previous)?,
        };
        let wall_time = started.elapsed();

        if report.termination == Termination::CapExceeded {
            return Err(Error::IterationCap {
                level: j - 1,
                iterations: report.iterations,
                residual: report.residual_trace.last().copied().unwrap_or(f64::NAN)
                    / problem.termination_scale(),
            });
        }

        steps.push(StepStat { level: j - 1, iterations: report.iterations, wall_time });
        surface[j - 1] = report.x.clone();
        if let Some(list) = reports.as_mut() {
            list.push(report);
        }
    }

    Ok(PricingRun {
        market: *market,
        grid: *grid,
        config: *config,
        surface,
        steps,
        step_reports: reports,
    })
}

/// Plain linear backward solve with a single matrix: the degenerate
/// reference route used when all controls coincide.
pub fn linear_backward_solve(
    matrix: &BandedMatrix,
    grid: &Grid,
    payoff: &PiecewiseLinearPayoff,
) -> Result<Vec<Vec<f64>>> {
    let n = grid.space_nodes;
    if matrix.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "linear backward solve matrix",
            expected: n,
            actual: matrix.dim(),
        });
    }
    let levels = grid.time_levels;
    let mut surface = vec![Vec::new(); levels];
    surface[levels - 1] = sample_payoff(payoff, grid);
    for j in (1..levels).rev() {
        surface[j - 1] = matrix.solve(&surface[j])?;
    }
    Ok(surface)
}

/// True when every time level respects the maximum-norm stability bound
/// `||V^j||_inf <= max|P| + 1e-8 * max(1, max|P|)`.
pub fn stability_check(run: &PricingRun, payoff: &PiecewiseLinearPayoff) -> bool {
    let sampled = sample_payoff(payoff, &run.grid);
    let payoff_max = sampled.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let bound = payoff_max + 1e-8 * payoff_max.max(1.0);
    run.surface
        .iter()
        .all(|level| level.iter().all(|v| v.abs() <= bound))
}

//! Reference solver and validation harness.
//!
//! The brute-force solver enumerates every per-row control assignment,
//! solves the row-spliced linear system for each, and keeps the solutions
//! that verify. Uniqueness of the verified solution is checked rather than
//! assumed. This path is deliberately independent of the production solvers
//! and exists to cross-check them; it is guarded to desk-scale inputs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};
use crate::penalty::{PenaltyConfig, solve_penalised};
use crate::policy::solve_policy;
use crate::problem::{ControlProblem, Sense};

/// Maximum number of control assignments the enumeration will visit.
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// Verification tolerance used when filtering enumerated candidates.
const VERIFY_TOL: f64 = 1e-9;

/// Distinct verified solutions further apart than this are an error.
const UNIQUENESS_TOL: f64 = 1e-9;

/// Solves a min-form problem by enumerating all `|S|^N` row-wise control
/// assignments. Returns the unique verifying solution.
pub fn brute_force_solve(p: &ControlProblem) -> Result<Vec<f64>> {
    if p.sense() != Sense::Min {
        return Err(Error::MinSenseRequired);
    }
    let combinations = (p.num_controls() as f64).powi(p.dim() as i32);
    if !(combinations <= ENUMERATION_LIMIT) {
        return Err(Error::EnumerationGuardExceeded {
            combinations,
            limit: ENUMERATION_LIMIT,
        });
    }

    let mut assignment = vec![0usize; p.dim()];
    let mut accepted: Vec<Vec<f64>> = Vec::new();
    loop {
        let (a_star, b_star) = p.spliced_system(&assignment)?;
        let x = a_star.solve(&b_star)?;
        if p.verify_solution(&x, VERIFY_TOL)?.ok {
            accepted.push(x);
        }
        if !advance(&mut assignment, p.num_controls()) {
            break;
        }
    }

    let Some(first) = accepted.first() else {
        return Err(Error::NoVerifyingAssignment);
    };
    let mut max_deviation = 0.0_f64;
    for other in &accepted[1..] {
        for (a, b) in first.iter().zip(other) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    if max_deviation > UNIQUENESS_TOL {
        return Err(Error::AmbiguousSolution { max_deviation });
    }
    Ok(accepted.swap_remove(0))
}

/// Odometer step over assignments; returns false once all are exhausted.
fn advance(assignment: &mut [usize], num_controls: usize) -> bool {
    for digit in assignment.iter_mut() {
        *digit += 1;
        if *digit < num_controls {
            return true;
        }
        *digit = 0;
    }
    false
}

/// Draws a non-empty set of row indices; rows in the set will carry the
/// strictly positive row sums. Rows with zero sums stay in the minority so
/// the instances remain well conditioned.
pub fn random_positive_rows<R: Rng>(rng: &mut R, dim: usize) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..dim).filter(|_| rng.random_bool(0.75)).collect();
    if rows.is_empty() {
        rows.push(rng.random_range(0..dim));
    }
    rows
}

/// Builds a random diagonally dominant tridiagonal M-matrix whose strictly
/// positive row sums sit exactly at `positive_rows`.
///
/// All band entries are dyadic rationals so that the row sums evaluate
/// exactly: rows outside `positive_rows` sum to exactly zero, rows inside
/// carry an exact positive margin.
pub fn random_m_matrix<R: Rng>(rng: &mut R, dim: usize, positive_rows: &[usize]) -> BandedMatrix {
    const DENOM: f64 = (1u64 << 20) as f64;
    let off = |rng: &mut R| -> f64 {
        // in [-1, -1/4]
        rng.random_range(-(1i64 << 20)..=-(1i64 << 18)) as f64 / DENOM
    };
    let mut lower = vec![0.0; dim - 1];
    let mut upper = vec![0.0; dim - 1];
    for v in lower.iter_mut() {
        *v = off(rng);
    }
    for v in upper.iter_mut() {
        *v = off(rng);
    }
    let mut diag = vec![0.0; dim];
    for (i, d) in diag.iter_mut().enumerate() {
        let sub = if i > 0 { lower[i - 1] } else { 0.0 };
        let sup = if i + 1 < dim { upper[i] } else { 0.0 };
        let mut value = -(sub + sup);
        if positive_rows.contains(&i) {
            // margin in [1/4, 1]
            value += rng.random_range((1i64 << 18)..=(1i64 << 20)) as f64 / DENOM;
        }
        *d = value;
    }
    let m = BandedMatrix::tridiagonal(lower, diag, upper).expect("consistent bands");
    debug_assert!(m.validate_m_matrix().is_ok());
    m
}

/// Draws a random min-form problem with up to `max_dim` rows and
/// `max_controls` controls. All matrices share one positive-row-sum set, so
/// the instance always passes construction.
pub fn random_problem<R: Rng>(rng: &mut R, max_dim: usize, max_controls: usize) -> ControlProblem {
    let dim = rng.random_range(1..=max_dim);
    let num_controls = rng.random_range(1..=max_controls);
    let positive_rows = random_positive_rows(rng, dim);

    let labels = (0..num_controls).map(|s| format!("s{s}")).collect();
    let matrices = (0..num_controls)
        .map(|_| random_m_matrix(rng, dim, &positive_rows))
        .collect();
    let rhs = (0..num_controls)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    ControlProblem::new(labels, matrices, rhs, Sense::Min).expect("generator yields valid problems")
}

/// Penalty intensity used by the randomized cross-check.
pub const CHECK_RHO: f64 = 1e8;

/// Agreement tolerance of the randomized cross-check.
pub const CHECK_TOL: f64 = 1e-5;

/// One failed trial with everything needed to reproduce it.
#[derive(Debug, Clone)]
pub struct CheckFailure {
    pub trial: usize,
    pub penalty_deviation: f64,
    pub policy_deviation: f64,
    pub problem_dump: String,
}

/// Aggregate outcome of `run_check`.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub trials: usize,
    pub passes: usize,
    pub failures: Vec<CheckFailure>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.passes == self.trials
    }
}

/// Runs `trials` randomized cross-checks: the penalty solver (rho = 1e8) and
/// policy iteration must both match the brute-force enumeration within
/// `1e-5` in the infinity norm. Deterministic for a fixed seed.
pub fn run_check(seed: u64, trials: usize) -> Result<CheckReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = CheckReport { trials, passes: 0, failures: Vec::new() };
    for trial in 0..trials {
        let p = random_problem(&mut rng, 6, 3);
        let reference = brute_force_solve(&p)?;
        let zeros = vec![0.0; p.dim()];

        let pen = solve_penalised(&p, &PenaltyConfig::new(CHECK_RHO), &zeros)?;
        let pol = solve_policy(&p, 1e-8, 100, &zeros)?;

        let penalty_deviation = inf_dist(&pen.x, &reference);
        let policy_deviation = inf_dist(&pol.x, &reference);
        if penalty_deviation <= CHECK_TOL && policy_deviation <= CHECK_TOL {
            report.passes += 1;
        } else {
            report.failures.push(CheckFailure {
                trial,
                penalty_deviation,
                policy_deviation,
                problem_dump: dump_problem(&p),
            });
        }
    }
    Ok(report)
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Full-precision dump of a problem, suitable for reproducing a failure.
pub fn dump_problem(p: &ControlProblem) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "dim = {}, controls = {}", p.dim(), p.num_controls());
    for s in 0..p.num_controls() {
        let m = p.matrix(s);
        let _ = writeln!(out, "control {s} ({}):", p.control_label(s));
        let _ = writeln!(out, "  lower = {:?}", m.lower());
        let _ = writeln!(out, "  diag  = {:?}", m.diag());
        let _ = writeln!(out, "  upper = {:?}", m.upper());
        let _ = writeln!(out, "  b     = {:?}", p.rhs(s));
    }
    out
}

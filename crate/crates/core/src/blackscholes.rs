//! Implicit finite-difference building blocks for Black-Scholes pricing
//! with unequal borrowing/lending rates and stock borrowing fees.
//!
//! One backward Euler step with central space differences turns each
//! Black-Scholes operator with parameters (r, q, sigma) into a tridiagonal
//! matrix over the price grid; the four (rate, dividend) control pairs of
//! the borrowing/lending model share a grid and differ only in r and q.

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};

/// Market rates of the unequal borrowing/lending model. The arbitrage-free
/// ordering `borrow_rate >= lend_rate >= borrow_fee >= 0` is enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    /// Cash borrowing rate r_b (per year).
    pub borrow_rate: f64,
    /// Cash lending rate r_l (per year).
    pub lend_rate: f64,
    /// Stock borrowing fee r_f (per year).
    pub borrow_fee: f64,
    /// Volatility sigma (per sqrt-year).
    pub sigma: f64,
}

impl MarketParams {
    pub fn new(borrow_rate: f64, lend_rate: f64, borrow_fee: f64, sigma: f64) -> Result<Self> {
        if !(borrow_rate >= lend_rate && lend_rate >= borrow_fee && borrow_fee >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rates must satisfy r_b >= r_l >= r_f >= 0 to preclude arbitrage; \
                 got r_b={borrow_rate}, r_l={lend_rate}, r_f={borrow_fee}"
            )));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(Self { borrow_rate, lend_rate, borrow_fee, sigma })
    }
}

/// Uniform space-time grid: `time_levels` points on [0, T] and
/// `space_nodes` points on [0, s_max], node i at price i * ds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub s_max: f64,
    pub horizon: f64,
    pub time_levels: usize,
    pub space_nodes: usize,
}

impl Grid {
    pub fn new(s_max: f64, horizon: f64, time_levels: usize, space_nodes: usize) -> Result<Self> {
        if !(s_max > 0.0) {
            return Err(Error::InvalidParameter(format!("s_max must be > 0, got {s_max}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
        }
        if time_levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 time levels, got {time_levels}"
            )));
        }
        if space_nodes < 3 {
            return Err(Error::InvalidParameter(format!(
                "need at least 3 space nodes, got {space_nodes}"
            )));
        }
        Ok(Self { s_max, horizon, time_levels, space_nodes })
    }

    /// Time step k = T / (M - 1).
    pub fn time_step(&self) -> f64 {
        self.horizon / (self.time_levels - 1) as f64
    }

    /// Space step h = s_max / (N - 1).
    pub fn space_step(&self) -> f64 {
        self.s_max / (self.space_nodes - 1) as f64
    }

    /// Price at node i.
    pub fn price_at(&self, i: usize) -> f64 {
        i as f64 * self.space_step()
    }
}

/// Piecewise-linear payoff given by breakpoints with strictly increasing
/// prices. Evaluation interpolates linearly and extrapolates by constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPayoff {
    breakpoints: Vec<(f64, f64)>,
}

impl PiecewiseLinearPayoff {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidParameter("payoff needs at least one breakpoint".into()));
        }
        for pair in breakpoints.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(Error::InvalidParameter(format!(
                    "payoff breakpoints must have strictly increasing prices; \
                     got {} then {}",
                    pair[0].0, pair[1].0
                )));
            }
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn value(&self, s: f64) -> f64 {
        let points = &self.breakpoints;
        if s <= points[0].0 {
            return points[0].1;
        }
        if s >= points[points.len() - 1].0 {
            return points[points.len() - 1].1;
        }
        // s lies strictly between the first and last breakpoint.
        let hi = points.partition_point(|&(bs, _)| bs <= s);
        let (s0, p0) = points[hi - 1];
        if s == s0 {
            return p0;
        }
        let (s1, p1) = points[hi];
        p0 + (s - s0) * (p1 - p0) / (s1 - s0)
    }
}

/// The butterfly spread test instrument: zero outside [100, 300], peaking
/// at 25 for S = 200, flat zero out to 600.
pub fn butterfly_payoff() -> PiecewiseLinearPayoff {
    PiecewiseLinearPayoff::new(vec![
        (0.0, 0.0),
        (100.0, 0.0),
        (200.0, 25.0),
        (300.0, 0.0),
        (600.0, 0.0),
    ])
    .expect("static breakpoints are valid")
}

/// Payoff evaluated at every grid node.
pub fn sample_payoff(payoff: &PiecewiseLinearPayoff, grid: &Grid) -> Vec<f64> {
    (0..grid.space_nodes).map(|i| payoff.value(grid.price_at(i))).collect()
}

/// One-step backward Euler matrix for the Black-Scholes operator with rate
/// `r`, dividend rate `q` and volatility `sigma` on `grid`.
///
/// Interior row i (node price i*h) carries
///
/// ```text
/// a_i = -1/2 i^2 sigma^2 k + 1/2 i (r - q) k
/// b_i = 1 + i^2 sigma^2 k + r k
/// c_i = -1/2 i^2 sigma^2 k - 1/2 i (r - q) k
/// ```
///
/// and the boundary rows 0 and N-1 are identity rows, matching Dirichlet
/// values carried on the right-hand side. The result must pass the M-matrix
/// check; a drift-dominated row (i * sigma^2 < |r - q|) is a hard error
/// rather than a silent switch to one-sided differences.
pub fn bs_matrix(rate: f64, dividend: f64, sigma: f64, grid: &Grid) -> Result<BandedMatrix> {
    let n = grid.space_nodes;
    let k = grid.time_step();
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n - 1];

    diag[0] = 1.0;
    diag[n - 1] = 1.0;
    for i in 1..n - 1 {
        let fi = i as f64;
        let diffusion = 0.5 * fi * fi * sigma * sigma * k;
        let drift = 0.5 * fi * (rate - dividend) * k;
        lower[i - 1] = -diffusion + drift;
        diag[i] = 1.0 + 2.0 * diffusion + rate * k;
        upper[i] = -diffusion - drift;
    }

    let m = BandedMatrix::tridiagonal(lower, diag, upper)?;
    m.validate_m_matrix().map_err(|violation| {
        let row = match violation {
            crate::banded::MMatrixViolation::PositiveOffDiagonal { row, .. } => row,
            crate::banded::MMatrixViolation::NonPositiveDiagonal { row, .. } => row,
            crate::banded::MMatrixViolation::NegativeRowSum { row, .. } => row,
            crate::banded::MMatrixViolation::NoPositiveRowSum => 0,
        };
        let fi = row as f64;
        Error::NonMonotoneRow {
            row,
            detail: format!(
                "i*sigma^2 = {:e} vs |r - q| = {:e} ({violation})",
                fi * sigma * sigma,
                (rate - dividend).abs()
            ),
        }
    })?;
    Ok(m)
}

/// The four (rate, dividend) control pairs of the borrowing/lending model,
/// in their canonical order.
pub fn borrow_lend_controls(mp: &MarketParams) -> Vec<(f64, f64)> {
    vec![
        (mp.lend_rate, 0.0),
        (mp.borrow_rate, 0.0),
        (mp.lend_rate, mp.borrow_fee),
        (mp.borrow_rate, mp.borrow_rate - mp.lend_rate + mp.borrow_fee),
    ]
}

/// Display label for a control pair.
pub fn control_label(rate: f64, dividend: f64) -> String {
    format!("r={rate},q={dividend}")
}

//! Solvers for discrete Hamilton-Jacobi-Bellman systems with a finite
//! control set.
//!
//! The central object is the min-form system `min{A_s x - b_s : s in S} = 0`
//! where every `A_s` is a tridiagonal M-matrix. Two production solvers are
//! provided: a penalty approximation solved exactly by a finite-termination
//! masked iteration, and policy iteration as the reference method. A
//! brute-force enumeration solver cross-checks both on small instances.
//!
//! On top of the solvers sits an implicit finite-difference pricing engine
//! for European options under unequal borrowing/lending rates and stock
//! borrowing fees, which produces one min-form system per backward time
//! step.

// Parameter checks are written as `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod blackscholes;
pub mod error;
pub mod oracle;
pub mod penalty;
pub mod policy;
pub mod pricing;
pub mod problem;
pub mod report;

pub use banded::{BandedMatrix, MMatrixViolation, row_splice};
pub use blackscholes::{
    Grid, MarketParams, PiecewiseLinearPayoff, borrow_lend_controls, bs_matrix, butterfly_payoff,
    sample_payoff,
};
pub use error::{Error, Result};
pub use penalty::{PenaltyConfig, PenaltyIterate, solve_penalised};
pub use policy::{PolicyIterate, select_policy, solve_policy};
pub use pricing::{PricingConfig, PricingRun, SolverKind, price, stability_check};
pub use problem::{ControlProblem, Residual, Sense, Verification};
pub use report::{SolveReport, Termination};

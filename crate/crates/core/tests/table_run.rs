//! Full-scale cross-agreement of the two solvers on the reference butterfly
//! setting (400x400 grid, r_b=0.15, r_l=0.1, r_f=0.08, sigma=0.4).

use hjb_core::pricing::{PricingConfig, price};
use hjb_core::{Grid, MarketParams, butterfly_payoff};

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn penalty_tracks_policy_on_reference_setting() {
    let market = MarketParams::new(0.15, 0.1, 0.08, 0.4).unwrap();
    let grid = Grid::new(600.0, 1.0, 400, 400).unwrap();
    let payoff = butterfly_payoff();

    let policy = price(&market, &grid, &payoff, &PricingConfig::policy()).unwrap();
    let pen_1e6 = price(&market, &grid, &payoff, &PricingConfig::penalty(1e6)).unwrap();
    let pen_1e4 = price(&market, &grid, &payoff, &PricingConfig::penalty(1e4)).unwrap();

    // Whole surfaces at rho = 1e6.
    let surface_dev = policy
        .surface
        .iter()
        .zip(&pen_1e6.surface)
        .fold(0.0_f64, |m, (a, b)| m.max(inf_dist(a, b)));
    assert!(surface_dev <= 1e-5, "surface deviation {surface_dev:e}");

    // Time-zero profile at the default rho = 1e4.
    let tz_dev = inf_dist(policy.time_zero(), pen_1e4.time_zero());
    assert!(tz_dev <= 1e-3, "time-zero deviation {tz_dev:e}");
}

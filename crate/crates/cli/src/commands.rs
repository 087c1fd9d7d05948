//! The four subcommands: pricing runs, penalty-parameter sweeps, iteration
//! statistics and the randomized oracle check.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::sync::atomic::{AtomicUsize, Ordering};

use hjb_core::pricing::{PricingConfig, PricingRun, price};
use hjb_core::{Grid, oracle};

use crate::config::{Method, RunConfig};

/// Failure modes mapped onto process exit codes: usage/config errors exit 1,
/// solver or I/O failures exit 2, oracle mismatches exit 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Solver(String),
    OracleMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Solver(_) => 2,
            CliError::OracleMismatch(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Solver(m) | CliError::OracleMismatch(m) => m,
        }
    }
}

/// 17-significant-digit decimal, losslessly parseable back into f64.
fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_output(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Solver(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| CliError::Solver(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

fn run_pricing(config: &RunConfig, pricing: &PricingConfig) -> Result<PricingRun, CliError> {
    let market = config.build_market().map_err(|e| CliError::Usage(e.to_string()))?;
    let grid = config.build_grid().map_err(|e| CliError::Usage(e.to_string()))?;
    let payoff = config.build_payoff().map_err(|e| CliError::Usage(e.to_string()))?;
    price(&market, &grid, &payoff, pricing).map_err(|e| CliError::Solver(e.to_string()))
}

fn penalty_config(config: &RunConfig, rho: f64) -> PricingConfig {
    let mut cfg = PricingConfig::penalty(rho);
    cfg.tol = config.tol;
    cfg.reference_control = config.reference_control;
    cfg
}

fn policy_config(config: &RunConfig) -> PricingConfig {
    let mut cfg = PricingConfig::policy();
    cfg.tol = config.tol;
    cfg
}

fn append_stats(out: &mut String, method: &str, run: &PricingRun) {
    for (step, stat) in run.steps.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{:.9}\n",
            step + 1,
            method,
            stat.iterations,
            stat.wall_time.as_secs_f64()
        ));
    }
}

/// `price`: writes `solution.csv` (time-zero profile) and `stats.csv`
/// (per-step iteration counts and wall times).
pub fn cmd_price(config: &RunConfig) -> Result<(), CliError> {
    let penalty_run = match config.method {
        Method::Penalty | Method::Both => {
            Some(run_pricing(config, &penalty_config(config, config.rho))?)
        }
        Method::Policy => None,
    };
    let policy_run = match config.method {
        Method::Policy | Method::Both => Some(run_pricing(config, &policy_config(config))?),
        Method::Penalty => None,
    };

    // With `both`, the penalty profile is the one written out.
    let profile_run = penalty_run.as_ref().or(policy_run.as_ref()).expect("one run exists");
    let grid = profile_run.grid;
    let mut solution = String::from("S,V\n");
    for (i, v) in profile_run.time_zero().iter().enumerate() {
        solution.push_str(&format!("{},{}\n", fmt17(grid.price_at(i)), fmt17(*v)));
    }

    let mut stats = String::from("timestep,method,iterations,wall_time_seconds\n");
    if let Some(run) = &penalty_run {
        append_stats(&mut stats, "penalty", run);
    }
    if let Some(run) = &policy_run {
        append_stats(&mut stats, "policy", run);
    }

    write_output(&config.output_dir, "solution.csv", &solution)?;
    write_output(&config.output_dir, "stats.csv", &stats)?;

    let total: f64 = penalty_run
        .iter()
        .chain(policy_run.iter())
        .map(|r| r.total_wall_time().as_secs_f64())
        .sum();
    println!(
        "price: wrote solution.csv and stats.csv to {} ({} steps, {:.3}s solve time)",
        config.output_dir.display(),
        grid.time_levels - 1,
        total
    );
    Ok(())
}

/// `penalty-sweep`: prices once per penalty intensity against a single
/// policy reference run and writes `rho,error_inf` rows; prints the log-log
/// regression slope.
pub fn cmd_penalty_sweep(config: &RunConfig, rhos: &[f64], jobs: usize) -> Result<(), CliError> {
    if rhos.is_empty() {
        return Err(CliError::Usage("penalty-sweep needs a non-empty rho list".into()));
    }
    if rhos.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("rho list must be strictly ascending".into()));
    }

    let reference = run_pricing(config, &policy_config(config))?;
    let errors = run_parallel(rhos.len(), jobs, |idx| {
        let run = run_pricing(config, &penalty_config(config, rhos[idx]))?;
        Ok(inf_dist(run.time_zero(), reference.time_zero()))
    })?;

    let mut sweep = String::from("rho,error_inf\n");
    for (rho, err) in rhos.iter().zip(&errors) {
        sweep.push_str(&format!("{},{}\n", rho, fmt17(*err)));
    }
    write_output(&config.output_dir, "sweep.csv", &sweep)?;

    match log_log_slope(rhos, &errors) {
        Some(slope) => println!("penalty-sweep: slope = {slope:.4}"),
        None => println!("penalty-sweep: slope = n/a"),
    }
    println!("penalty-sweep: wrote sweep.csv to {}", config.output_dir.display());
    Ok(())
}

/// Least-squares slope of ln(error) against ln(rho); `None` when fewer than
/// two usable (positive) points exist.
pub fn log_log_slope(rhos: &[f64], errors: &[f64]) -> Option<f64> {
    let points: Vec<(f64, f64)> = rhos
        .iter()
        .zip(errors)
        .filter(|&(&r, &e)| r > 0.0 && e > 0.0)
        .map(|(&r, &e)| (r.ln(), e.ln()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let var: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    (var > 0.0).then(|| cov / var)
}

/// The penalty intensities whose iteration counts are tabulated.
pub const STATS_RHOS: [f64; 2] = [4e3, 1e6];

/// `iteration-stats`: per grid and method, the distribution of per-step
/// iteration counts as `grid,method,rho,n,percent` rows.
pub fn cmd_iteration_stats(
    config: &RunConfig,
    grids: &[(usize, usize)],
    jobs: usize,
) -> Result<(), CliError> {
    if grids.is_empty() {
        return Err(CliError::Usage("iteration-stats needs a non-empty grid list".into()));
    }

    let runs = run_parallel(grids.len(), jobs, |idx| {
        let (m, n) = grids[idx];
        let mut grid_config = config.clone();
        grid_config.grid_m = m;
        grid_config.grid_n = n;
        let policy = run_pricing(&grid_config, &policy_config(&grid_config))?;
        let mut penalties = Vec::new();
        for rho in STATS_RHOS {
            penalties.push(run_pricing(&grid_config, &penalty_config(&grid_config, rho))?);
        }
        Ok((policy, penalties))
    })?;

    let mut out = String::from("grid,method,rho,n,percent\n");
    for ((m, n), (policy, penalties)) in grids.iter().zip(&runs) {
        let grid_label = format!("{m}x{n}");
        append_histogram(&mut out, &grid_label, "policy", "-", &policy.iteration_counts());
        for (rho, run) in STATS_RHOS.iter().zip(penalties) {
            append_histogram(&mut out, &grid_label, "penalty", &format!("{rho}"), &run.iteration_counts());
        }
    }
    write_output(&config.output_dir, "iterations.csv", &out)?;
    println!("iteration-stats: wrote iterations.csv to {}", config.output_dir.display());
    Ok(())
}

fn append_histogram(out: &mut String, grid: &str, method: &str, rho: &str, counts: &[usize]) {
    let total = counts.len();
    let max = counts.iter().copied().max().unwrap_or(0);
    for n in 1..=max {
        let hits = counts.iter().filter(|&&c| c == n).count();
        if hits > 0 {
            let percent = 100.0 * hits as f64 / total as f64;
            out.push_str(&format!("{grid},{method},{rho},{n},{percent:.2}\n"));
        }
    }
}

/// `oracle-check`: randomized agreement test of both production solvers
/// against the brute-force enumeration.
pub fn cmd_oracle_check(seed: u64, trials: usize) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("oracle-check needs trials >= 1".into()));
    }
    let report = oracle::run_check(seed, trials)
        .map_err(|e| CliError::Solver(e.to_string()))?;
    println!("oracle-check: {}/{} passed (seed {seed})", report.passes, report.trials);
    if report.all_passed() {
        Ok(())
    } else {
        let mut detail = String::new();
        for failure in &report.failures {
            detail.push_str(&format!(
                "trial {}: penalty deviation {:e}, policy deviation {:e}\n{}",
                failure.trial,
                failure.penalty_deviation,
                failure.policy_deviation,
                failure.problem_dump
            ));
        }
        Err(CliError::OracleMismatch(format!(
            "{} of {} trials disagreed with the brute-force oracle:\n{detail}",
            report.failures.len(),
            report.trials
        )))
    }
}

/// Runs `count` independent tasks on up to `jobs` threads, preserving the
/// task order in the returned vector.
fn run_parallel<T, F>(count: usize, jobs: usize, task: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(usize) -> Result<T, CliError> + Sync,
{
    let jobs = jobs.max(1).min(count.max(1));
    if jobs == 1 {
        return (0..count).map(&task).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T, CliError>>>> =
        Mutex::new((0..count).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| {
                loop {
                    let idx = next.fetch_add(1, Ordering::Relaxed);
                    if idx >= count {
                        break;
                    }
                    let outcome = task(idx);
                    slots.lock().expect("worker poisoned the slot lock")[idx] = Some(outcome);
                }
            });
        }
    });
    slots
        .into_inner()
        .expect("worker poisoned the slot lock")
        .into_iter()
        .map(|slot| slot.expect("every task index was claimed"))
        .collect()
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Parses `MxN` grid descriptors like `400x400,30x900`.
pub fn parse_grid_list(value: &str) -> Result<Vec<(usize, usize)>, CliError> {
    let mut grids = Vec::new();
    for token in value.split(',') {
        let Some((m, n)) = token.trim().split_once('x') else {
            return Err(CliError::Usage(format!("grid `{token}` is not `MxN`")));
        };
        let m = m.parse::<usize>()
            .map_err(|_| CliError::Usage(format!("invalid time-level count `{m}`")))?;
        let n = n.parse::<usize>()
            .map_err(|_| CliError::Usage(format!("invalid space-node count `{n}`")))?;
        // Surface dimension checks early, with the usage exit code.
        Grid::new(1.0, 1.0, m, n).map_err(|e| CliError::Usage(e.to_string()))?;
        grids.push((m, n));
    }
    Ok(grids)
}

/// Parses an ascending comma-separated rho list.
pub fn parse_rho_list(value: &str) -> Result<Vec<f64>, CliError> {
    let mut rhos = Vec::new();
    for token in value.split(',') {
        let rho = token.trim().parse::<f64>()
            .map_err(|_| CliError::Usage(format!("invalid rho `{token}`")))?;
        if !(rho > 0.0) {
            return Err(CliError::Usage(format!("rho must be positive, got `{token}`")));
        }
        rhos.push(rho);
    }
    Ok(rhos)
}

/// Prints failures the way every command reports them.
pub fn report_failure(err: &CliError) {
    let _ = writeln!(std::io::stderr(), "error: {}", err.message());
}

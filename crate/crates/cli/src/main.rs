//! `hjb`: experiment front end for the solver library.
//!
//! Subcommands: `price`, `penalty-sweep`, `iteration-stats`, `oracle-check`.
//! Options come from a `key = value` config file (`--config`) with
//! command-line flags taking precedence. Exit codes: 0 success, 1 usage or
//! config error, 2 solver failure, 3 oracle mismatch.

use std::path::PathBuf;
use std::process::ExitCode;

use hjb_cli::commands::{self, CliError};
use hjb_cli::config::RunConfig;

const USAGE: &str = "\
usage: hjb <command> [--config FILE] [--key value ...]

commands:
  price            run one pricing experiment; writes solution.csv, stats.csv
  penalty-sweep    price across penalty intensities; writes sweep.csv
  iteration-stats  per-step iteration histograms; writes iterations.csv
  oracle-check     randomized solver cross-check against brute force

common flags mirror the config keys:
  --r-b --r-l --r-f --sigma --t --s-max --grid-m --grid-n
  --tol --rho --method --reference-control --output-dir --payoff

command-specific flags:
  penalty-sweep:    --rhos 1e1,1e2,...     (ascending; default decades 1e1..1e6)
  iteration-stats:  --grids 400x400,...    (default 400x400,1000x1000,900x30,30x900)
  penalty-sweep, iteration-stats: --jobs N (parallel runs; default 1)
  oracle-check:     --seed N --trials N    (defaults 42 and 100)
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            commands::report_failure(&err);
            if matches!(err, CliError::Usage(_)) {
                eprintln!("{USAGE}");
            }
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(args: &[String]) -> Result<(), CliError> {
    let Some(command) = args.first() else {
        return Err(CliError::Usage("missing command".into()));
    };
    let flags = parse_flags(&args[1..])?;

    match command.as_str() {
        "price" => {
            let (config, rest) = build_config(&flags)?;
            reject_unknown(&rest, &[])?;
            commands::cmd_price(&config)
        }
        "penalty-sweep" => {
            let (config, rest) = build_config(&flags)?;
            let rhos = match flag_value(&rest, "rhos") {
                Some(list) => commands::parse_rho_list(list)?,
                None => vec![1e1, 1e2, 1e3, 1e4, 1e5, 1e6],
            };
            let jobs = parse_jobs(&rest)?;
            reject_unknown(&rest, &["rhos", "jobs"])?;
            commands::cmd_penalty_sweep(&config, &rhos, jobs)
        }
        "iteration-stats" => {
            let (config, rest) = build_config(&flags)?;
            let grids = match flag_value(&rest, "grids") {
                Some(list) => commands::parse_grid_list(list)?,
                None => vec![(400, 400), (1000, 1000), (900, 30), (30, 900)],
            };
            let jobs = parse_jobs(&rest)?;
            reject_unknown(&rest, &["grids", "jobs"])?;
            commands::cmd_iteration_stats(&config, &grids, jobs)
        }
        "oracle-check" => {
            let seed = match flag_value(&flags, "seed") {
                Some(v) => v
                    .parse::<u64>()
                    .map_err(|_| CliError::Usage(format!("invalid seed `{v}`")))?,
                None => 42,
            };
            let trials = match flag_value(&flags, "trials") {
                Some(v) => v
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("invalid trial count `{v}`")))?,
                None => 100,
            };
            reject_unknown(&flags, &["seed", "trials"])?;
            commands::cmd_oracle_check(seed, trials)
        }
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn parse_flags(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut flags = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let Some(name) = arg.strip_prefix("--") else {
            return Err(CliError::Usage(format!("unexpected argument `{arg}`")));
        };
        let Some(value) = iter.next() else {
            return Err(CliError::Usage(format!("flag --{name} needs a value")));
        };
        flags.push((name.replace('-', "_"), value.clone()));
    }
    Ok(flags)
}

/// Builds the run configuration: defaults, then the config file, then flag
/// overrides in order. Returns the flags that are not config keys.
fn build_config(flags: &[(String, String)]) -> Result<(RunConfig, Vec<(String, String)>), CliError> {
    let mut config = match flag_value(flags, "config") {
        Some(path) => RunConfig::from_file(&PathBuf::from(path))
            .map_err(|e| CliError::Usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    let mut rest = Vec::new();
    for (key, value) in flags {
        if key == "config" {
            continue;
        }
        match config.apply_key(key, value) {
            Ok(()) => {}
            Err(e) if e.field.as_deref() == Some(key.as_str()) && e.message == "unknown key" => {
                rest.push((key.clone(), value.clone()));
            }
            Err(e) => return Err(CliError::Usage(e.to_string())),
        }
    }
    Ok((config, rest))
}

fn flag_value<'a>(flags: &'a [(String, String)], name: &str) -> Option<&'a str> {
    flags
        .iter()
        .rev()
        .find(|(key, _)| key == name)
        .map(|(_, value)| value.as_str())
}

fn parse_jobs(flags: &[(String, String)]) -> Result<usize, CliError> {
    match flag_value(flags, "jobs") {
        Some(v) => {
            let jobs = v
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("invalid job count `{v}`")))?;
            if jobs == 0 {
                return Err(CliError::Usage("--jobs must be >= 1".into()));
            }
            Ok(jobs)
        }
        None => Ok(1),
    }
}

fn reject_unknown(flags: &[(String, String)], allowed: &[&str]) -> Result<(), CliError> {
    for (key, _) in flags {
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("unknown flag --{}", key.replace('_', "-"))));
        }
    }
    Ok(())
}

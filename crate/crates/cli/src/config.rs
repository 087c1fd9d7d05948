//! Run configuration: flat `key = value` text files with `#` comments, plus
//! the matching command-line overrides. Parsing is hand-rolled so experiment
//! records stay dependency-free and diffable.

use std::fmt;
use std::path::{Path, PathBuf};

use hjb_core::{Grid, MarketParams, PiecewiseLinearPayoff, butterfly_payoff};

/// Which solver(s) a pricing command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Penalty,
    Policy,
    Both,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Penalty => "penalty",
            Method::Policy => "policy",
            Method::Both => "both",
        }
    }
}

/// Payoff selection: the built-in butterfly or explicit breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum PayoffSpec {
    Butterfly,
    Breakpoints(Vec<(f64, f64)>),
}

/// A config-file or flag error with its location.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self { line: None, field: None, message: message.into() }
    }

    fn for_field(field: &str, message: impl Into<String>) -> Self {
        Self { line: None, field: Some(field.into()), message: message.into() }
    }

    fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config")?;
        if let Some(line) = self.line {
            write!(f, " line {line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, ", field `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// All knobs of an experiment run. Defaults reproduce the reference
/// parameter set: r_b=0.15, r_l=0.1, r_f=0.08, sigma=0.4, T=1, S_max=600,
/// M=N=400, tol=1e-8, rho=1e4, butterfly payoff.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub r_b: f64,
    pub r_l: f64,
    pub r_f: f64,
    pub sigma: f64,
    pub t: f64,
    pub s_max: f64,
    pub grid_m: usize,
    pub grid_n: usize,
    pub tol: f64,
    pub rho: f64,
    pub method: Method,
    pub reference_control: usize,
    pub output_dir: PathBuf,
    pub payoff: PayoffSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            r_b: 0.15,
            r_l: 0.1,
            r_f: 0.08,
            sigma: 0.4,
            t: 1.0,
            s_max: 600.0,
            grid_m: 400,
            grid_n: 400,
            tol: 1e-8,
            rho: 1e4,
            method: Method::Penalty,
            reference_control: 0,
            output_dir: PathBuf::from("."),
            payoff: PayoffSpec::Butterfly,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new(format!("cannot read config file {}: {e}", path.display()))
        })?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new("expected `key = value`").at_line(line_no));
            };
            config
                .apply_key(key.trim(), value.trim())
                .map_err(|e| e.at_line(line_no))?;
        }
        Ok(config)
    }

    /// Applies one `key = value` assignment (also used for flag overrides).
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "r_b" => self.r_b = parse_float(key, value)?,
            "r_l" => self.r_l = parse_float(key, value)?,
            "r_f" => self.r_f = parse_float(key, value)?,
            "sigma" => self.sigma = parse_float(key, value)?,
            "t" => self.t = parse_float(key, value)?,
            "s_max" => self.s_max = parse_float(key, value)?,
            "grid_m" => self.grid_m = parse_count(key, value)?,
            "grid_n" => self.grid_n = parse_count(key, value)?,
            "tol" => self.tol = parse_float(key, value)?,
            "rho" => self.rho = parse_float(key, value)?,
            "method" => {
                self.method = match value {
                    "penalty" => Method::Penalty,
                    "policy" => Method::Policy,
                    "both" => Method::Both,
                    other => {
                        return Err(ConfigError::for_field(
                            key,
                            format!("unknown method `{other}` (penalty | policy | both)"),
                        ));
                    }
                }
            }
            "reference_control" => self.reference_control = parse_count(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "payoff" => self.payoff = parse_payoff(value)?,
            other => {
                return Err(ConfigError::for_field(other, "unknown key".to_string()));
            }
        }
        Ok(())
    }

    /// Canonical serialisation; parsing it back reproduces the config.
    pub fn to_config_string(&self) -> String {
        let payoff = match &self.payoff {
            PayoffSpec::Butterfly => "butterfly".to_string(),
            PayoffSpec::Breakpoints(points) => points
                .iter()
                .map(|(s, p)| format!("({s},{p})"))
                .collect::<Vec<_>>()
                .join(" "),
        };
        format!(
            "r_b = {}\nr_l = {}\nr_f = {}\nsigma = {}\nt = {}\ns_max = {}\n\
             grid_m = {}\ngrid_n = {}\ntol = {}\nrho = {}\nmethod = {}\n\
             reference_control = {}\noutput_dir = {}\npayoff = {}\n",
            self.r_b,
            self.r_l,
            self.r_f,
            self.sigma,
            self.t,
            self.s_max,
            self.grid_m,
            self.grid_n,
            self.tol,
            self.rho,
            self.method.as_str(),
            self.reference_control,
            self.output_dir.display(),
            payoff,
        )
    }

    pub fn build_market(&self) -> Result<MarketParams, ConfigError> {
        MarketParams::new(self.r_b, self.r_l, self.r_f, self.sigma)
            .map_err(|e| ConfigError::for_field("r_b/r_l/r_f/sigma", e.to_string()))
    }

    pub fn build_grid(&self) -> Result<Grid, ConfigError> {
        Grid::new(self.s_max, self.t, self.grid_m, self.grid_n)
            .map_err(|e| ConfigError::for_field("grid_m/grid_n/t/s_max", e.to_string()))
    }

    pub fn build_payoff(&self) -> Result<PiecewiseLinearPayoff, ConfigError> {
        match &self.payoff {
            PayoffSpec::Butterfly => Ok(butterfly_payoff()),
            PayoffSpec::Breakpoints(points) => PiecewiseLinearPayoff::new(points.clone())
                .map_err(|e| ConfigError::for_field("payoff", e.to_string())),
        }
    }
}

fn parse_float(field: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|_| ConfigError::for_field(field, format!("invalid number `{value}`")))
}

fn parse_count(field: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .parse::<usize>()
        .map_err(|_| ConfigError::for_field(field, format!("invalid count `{value}`")))
}

/// Accepts `butterfly` or a breakpoint list like `(0,0) (100,0) (200,25)`.
fn parse_payoff(value: &str) -> Result<PayoffSpec, ConfigError> {
    if value == "butterfly" {
        return Ok(PayoffSpec::Butterfly);
    }
    let mut points = Vec::new();
    for token in value.split_whitespace() {
        let inner = token
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| {
                ConfigError::for_field("payoff", format!("breakpoint `{token}` is not `(S,P)`"))
            })?;
        let Some((s, p)) = inner.split_once(',') else {
            return Err(ConfigError::for_field(
                "payoff",
                format!("breakpoint `{token}` is not `(S,P)`"),
            ));
        };
        points.push((parse_float("payoff", s)?, parse_float("payoff", p)?));
    }
    if points.is_empty() {
        return Err(ConfigError::for_field("payoff", "empty breakpoint list".to_string()));
    }
    Ok(PayoffSpec::Breakpoints(points))
}

//! Library side of the `asymcopula` tool: argument types, data ingestion,
//! report assembly and the four commands.

pub mod commands;
pub mod data;
pub mod report;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use asymcopula::inference::{AsymSide, BaseFamily, Level, ModelSpec};
use asymcopula::CopulaError;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed input: exit code 2.
    Config(String),
    /// Every model of the grid failed numerically: exit code 3.
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CopulaError> for CliError {
    fn from(e: CopulaError) -> Self {
        match e {
            CopulaError::Numeric { .. }
            | CopulaError::RootNotFound { .. }
            | CopulaError::NotConverged(_)
            | CopulaError::NoClosedForm(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "asymcopula",
    version,
    about = "Fit, simulate and inspect asymmetric copulas with tail dependence"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit GPD-tailed margins and a grid of copula models to two CSV columns.
    Fit(FitArgs),
    /// Generate a synthetic sea-state analogue and run the fit workflow on it.
    Demo(DemoArgs),
    /// Draw samples from a copula model, optionally mapped through fitted margins.
    Simulate(SimulateArgs),
    /// Tail-dependence indices and diagonal probes for a model.
    Tails(TailsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Models to fit, comma-separated: `all`, a family (`clayton`), or `family:level[:side]`.
    #[arg(long, default_value = "all")]
    pub grid: String,
    /// Coordinate carrying the asymmetry exponent when a grid entry does not say: u, v or both.
    #[arg(long = "asym-side", default_value = "v")]
    pub asym_side: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for reports.
    #[arg(long, default_value = "asymcopula-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Two column names, comma-separated.
    #[arg(long)]
    pub cols: String,
    /// Threshold quantile per column (one value applies to both).
    #[arg(long, default_value = "0.9")]
    pub thresholds: String,
    /// Dither half-width per column, to break ties in rounded data.
    #[arg(long, default_value = "0")]
    pub dither: String,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    /// Number of synthetic observations.
    #[arg(long, default_value_t = 8103)]
    pub n: usize,
    #[arg(long, default_value = "0.9,0.96")]
    pub thresholds: String,
    #[arg(long, default_value = "0")]
    pub dither: String,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Model as `family:level[:side]`, e.g. `clayton:3:v`.
    #[arg(long, required_unless_present = "figure1")]
    pub model: Option<String>,
    /// Parameters in the order beta, theta, delta, alpha (those the model has).
    #[arg(long, allow_hyphen_values = true)]
    pub params: Option<String>,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `margins.json` written by `fit`; samples are then mapped to data units.
    #[arg(long)]
    pub margins: Option<PathBuf>,
    /// Reproduce the three-panel one/two/three-parameter survival-Clayton experiment.
    #[arg(long)]
    pub figure1: bool,
    /// Also write cdf and density on an N x N interior grid.
    #[arg(long)]
    pub surface: Option<usize>,
    #[arg(long, default_value = "asymcopula-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TailsArgs {
    /// Model as `family:level[:side]`; with `--report`, selects the fitted row.
    #[arg(long)]
    pub model: String,
    #[arg(long, allow_hyphen_values = true)]
    pub params: Option<String>,
    /// `report.json` from `fit`/`demo` to take parameters from.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "asymcopula-out")]
    pub out: PathBuf,
}

/// Parses `"a"` or `"a,b"` into one value per column.
pub fn parse_pair(text: &str, what: &str) -> CliResult<[f64; 2]> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("{what}: '{t}' is not a number")))
        })
        .collect::<CliResult<_>>()?;
    match vals.as_slice() {
        [x] => Ok([*x, *x]),
        [x, y] => Ok([*x, *y]),
        _ => Err(CliError::Config(format!(
            "{what}: expected one or two values, got {}",
            vals.len()
        ))),
    }
}

pub fn parse_params(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("parameter '{t}' is not a number")))
        })
        .collect()
}

/// Expands a grid description into sorted, de-duplicated model specs.
pub fn parse_grid(text: &str, side: &str) -> CliResult<Vec<ModelSpec>> {
    let side: AsymSide = side.parse()?;
    let mut out = Vec::new();
    for token in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if token.eq_ignore_ascii_case("all") {
            out.extend(ModelSpec::grid(side));
            continue;
        }
        let parts: Vec<&str> = token.split(':').collect();
        match parts.len() {
            1 => {
                let family: BaseFamily = token.parse()?;
                for level in [Level::Base, Level::Asymmetric, Level::Mixed] {
                    out.push(ModelSpec::new(family, level, side));
                }
            }
            2 => {
                let spec: ModelSpec = token.parse()?;
                out.push(ModelSpec::new(spec.family, spec.level, side));
            }
            _ => out.push(token.parse()?),
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(CliError::Config("the model grid is empty".into()));
    }
    Ok(out)
}

//! Serializable fit report and its plain-text rendering.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use asymcopula::inference::{FitResult, LrTest};
use asymcopula::margins::MarginModel;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub input: Option<String>,
    pub columns: [String; 2],
    pub thresholds: [f64; 2],
    pub dither: [f64; 2],
    pub grid: Vec<String>,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub source: String,
    pub n_rows: usize,
    pub n_dropped: usize,
    pub n_used: usize,
    /// Kendall's tau of the pseudo-observations.
    pub pseudo_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginSummary {
    pub column: String,
    pub threshold_quantile: f64,
    pub threshold: f64,
    pub u0: f64,
    pub gpd_scale: f64,
    pub gpd_shape: f64,
    pub n_exceedances: usize,
    pub dither_halfwidth: f64,
}

impl MarginSummary {
    pub fn new(column: &str, threshold_quantile: f64, m: &MarginModel) -> Self {
        Self {
            column: column.to_string(),
            threshold_quantile,
            threshold: m.threshold,
            u0: m.u0,
            gpd_scale: m.gpd_scale,
            gpd_shape: m.gpd_shape,
            n_exceedances: m.n_exceedances,
            dither_halfwidth: m.dither_halfwidth,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub spec: String,
    pub n_params: usize,
    pub result: Option<FitResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrRow {
    pub restricted: String,
    pub full: String,
    pub test: LrTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub spec: String,
    pub lambda_upper: f64,
    /// Delta-method standard error; absent when alpha has none.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub version: String,
    pub config: RunConfig,
    pub data: DataSummary,
    pub margins: Vec<MarginSummary>,
    pub models: Vec<ModelRow>,
    pub lr_tests: Vec<LrRow>,
    pub tails: Vec<TailRow>,
    /// Spec of the successful fit with the smallest BIC.
    pub best_bic: Option<String>,
}

/// Both fitted margins, enough to map copula samples back to data units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginsFile {
    pub columns: [String; 2],
    pub margins: [MarginModel; 2],
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn fmt_num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.2e}")
    } else {
        format!("{x:.4}")
    }
}

fn fmt_param(value: f64, stderr: Option<f64>, at_boundary: bool) -> String {
    match (stderr, at_boundary) {
        (_, true) => format!("{} (bound)", fmt_num(value)),
        (Some(s), _) => format!("{} ({})", fmt_num(value), fmt_num(s)),
        (None, _) => fmt_num(value),
    }
}

pub fn render_text(r: &FitReport) -> String {
    let mut s = String::new();
    let c = &r.config;
    let _ = writeln!(s, "asymcopula {} :: {}", r.version, c.command);
    let _ = writeln!(
        s,
        "data: {} ({} rows, {} dropped, {} used); columns {}, {}",
        r.data.source, r.data.n_rows, r.data.n_dropped, r.data.n_used, c.columns[0], c.columns[1]
    );
    let _ = writeln!(s, "kendall tau of pseudo-observations: {:.4}", r.data.pseudo_tau);
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<10} {:>6} {:>11} {:>8} {:>10} {:>10} {:>6} {:>8}",
        "margin", "q", "threshold", "u0", "gpd scale", "gpd shape", "n_exc", "dither"
    );
    for m in &r.margins {
        let _ = writeln!(
            s,
            "{:<10} {:>6.3} {:>11.4} {:>8.4} {:>10.4} {:>10.4} {:>6} {:>8.4}",
            m.column,
            m.threshold_quantile,
            m.threshold,
            m.u0,
            m.gpd_scale,
            m.gpd_shape,
            m.n_exceedances,
            m.dither_halfwidth
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<14} {:>2} {:>12} {:>12}  parameters (standard error)",
        "model", "p", "loglik", "bic"
    );
    for row in &r.models {
        match (&row.result, &row.error) {
            (Some(f), _) => {
                let params: Vec<String> = f
                    .params
                    .iter()
                    .map(|p| format!("{}={}", p.name, fmt_param(p.value, p.stderr, p.at_boundary)))
                    .collect();
                let best = if r.best_bic.as_deref() == Some(row.spec.as_str()) {
                    " *"
                } else {
                    ""
                };
                let _ = writeln!(
                    s,
                    "{:<14} {:>2} {:>12.2} {:>12.2}  {}{}",
                    row.spec,
                    row.n_params,
                    f.loglik,
                    f.bic,
                    params.join("  "),
                    best
                );
            }
            (None, err) => {
                let _ = writeln!(
                    s,
                    "{:<14} {:>2} {:>12} {:>12}  failed: {}",
                    row.spec,
                    row.n_params,
                    "-",
                    "-",
                    err.as_deref().unwrap_or("unknown error")
                );
            }
        }
    }
    if let Some(best) = &r.best_bic {
        let _ = writeln!(s, "* smallest BIC: {best}");
    }
    if !r.lr_tests.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<14} {:<14} {:>10} {:>3} {:>10}",
            "restricted", "full", "LR", "df", "p-value"
        );
        for t in &r.lr_tests {
            let _ = writeln!(
                s,
                "{:<14} {:<14} {:>10.2} {:>3} {:>10.3e}",
                t.restricted,
                t.full,
                t.test.statistic.max(0.0),
                t.test.df,
                t.test.p_value
            );
        }
    }
    if !r.tails.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<14} {:>10} {:>10}", "model", "lambda_U", "stderr");
        for t in &r.tails {
            let sd = t.stderr.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
            let _ = writeln!(s, "{:<14} {:>10.4} {:>10}", t.spec, t.lambda_upper, sd);
        }
    }
    s
}

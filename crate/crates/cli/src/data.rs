//! CSV ingestion and the synthetic sea-state analogue used by `demo`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use asymcopula::inference::ModelSpec;
use asymcopula::margins::gpd_quantile;
use asymcopula::sample::sample_model;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub source: String,
    pub columns: [String; 2],
    pub pairs: Vec<(f64, f64)>,
    pub n_rows: usize,
    /// Rows dropped because either value was empty or NaN.
    pub n_dropped: usize,
}

fn parse_cell(cell: &str, line: u64, column: &str) -> CliResult<Option<f64>> {
    let t = cell.trim();
    if t.is_empty() {
        return Ok(None);
    }
    let x: f64 = t
        .parse()
        .map_err(|_| CliError::Config(format!("line {line}, column {column}: '{t}' is not a number")))?;
    if x.is_nan() {
        Ok(None)
    } else if x.is_infinite() {
        Err(CliError::Config(format!(
            "line {line}, column {column}: infinite value"
        )))
    } else {
        Ok(Some(x))
    }
}

/// Reads two named columns from a headered, comma-separated file.
pub fn read_columns(path: &Path, cols: &str) -> CliResult<Dataset> {
    let names: Vec<String> = cols.split(',').map(|c| c.trim().to_string()).collect();
    let [a, b] = names.as_slice() else {
        return Err(CliError::Config(format!(
            "--cols needs exactly two names, got '{cols}'"
        )));
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            CliError::Config(format!(
                "column '{name}' not in {} (have: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    let (ia, ib) = (find(a)?, find(b)?);
    let mut pairs = Vec::new();
    let mut n_rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        n_rows += 1;
        let line = record.position().map_or(0, |p| p.line());
        let x = parse_cell(record.get(ia).unwrap_or(""), line, a)?;
        let y = parse_cell(record.get(ib).unwrap_or(""), line, b)?;
        if let (Some(x), Some(y)) = (x, y) {
            pairs.push((x, y));
        }
    }
    Ok(Dataset {
        source: path.display().to_string(),
        columns: [a.clone(), b.clone()],
        n_dropped: n_rows - pairs.len(),
        pairs,
        n_rows,
    })
}

/// Rayleigh body below the threshold and GPD above, matched at `(x0, u0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoMargin {
    pub threshold: f64,
    pub u0: f64,
    pub gpd_scale: f64,
    pub gpd_shape: f64,
}

impl DemoMargin {
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= self.u0 {
            let s = self.threshold / (-2.0 * (-self.u0).ln_1p()).sqrt();
            s * (-2.0 * (-p).ln_1p()).sqrt()
        } else {
            self.threshold + gpd_quantile((p - self.u0) / (1.0 - self.u0), self.gpd_scale, self.gpd_shape)
        }
    }
}

/// Significant wave height: threshold at the 90% quantile.
pub const DEMO_HS: DemoMargin = DemoMargin {
    threshold: 6.10,
    u0: 0.90,
    gpd_scale: 1.07,
    gpd_shape: -0.07,
};
/// Wind speed: threshold at the 96% quantile.
pub const DEMO_WS: DemoMargin = DemoMargin {
    threshold: 14.90,
    u0: 0.96,
    gpd_scale: 0.92,
    gpd_shape: -0.11,
};
/// Copula of the demo: frailty-mixed survival Clayton, asymmetric in `v`.
pub const DEMO_MODEL: &str = "clayton:3:v";
/// `beta, delta, alpha` of [`DEMO_MODEL`].
pub const DEMO_PARAMS: [f64; 3] = [0.25, 0.86, 1.75];

pub fn demo_dataset(n: usize, seed: u64) -> CliResult<Dataset> {
    let spec: ModelSpec = DEMO_MODEL.parse()?;
    let model = spec.build(&DEMO_PARAMS)?;
    let pairs = if n == 0 {
        vec![]
    } else {
        sample_model(n, &model, seed)?
            .pairs
            .into_iter()
            .map(|(u, v)| (DEMO_HS.quantile(u), DEMO_WS.quantile(v)))
            .collect()
    };
    Ok(Dataset {
        source: format!("demo (n={n}, seed={seed})"),
        columns: ["Hs".into(), "Ws".into()],
        n_rows: n,
        n_dropped: 0,
        pairs,
    })
}

pub fn write_pairs(path: &Path, header: [&str; 2], pairs: &[(f64, f64)]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| CliError::Config(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(io)?;
    for (x, y) in pairs {
        w.write_record([x.to_string(), y.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

//! Browser bindings: density/cdf surfaces, sample scatter and tail summaries
//! for any model of the fitting grid. The plain functions are usable natively;
//! the `#[wasm_bindgen]` wrappers turn errors into JavaScript exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use asymcopula::inference::ModelSpec;
use asymcopula::sample::sample_model;
use asymcopula::stats::kendall_tau_quadrature;
use asymcopula::tails::{
    closed_form_tails, numerical_tail_probe, TailSide, DEFAULT_LOWER_PROBES, DEFAULT_UPPER_PROBES,
};
use asymcopula::CopulaModel;

/// Largest sample the page may request in one call.
pub const MAX_SAMPLE: usize = 20_000;
pub const MAX_GRID: usize = 200;

fn build(spec: &str, params: &[f64]) -> Result<(ModelSpec, CopulaModel), String> {
    let spec: ModelSpec = spec.parse().map_err(|e: asymcopula::CopulaError| e.to_string())?;
    let model = spec.build(params).map_err(|e| e.to_string())?;
    Ok((spec, model))
}

/// Parameter names of a spec, comma-separated, in the order `build` expects.
pub fn param_names(spec: &str) -> Result<String, String> {
    let spec: ModelSpec = spec.parse().map_err(|e: asymcopula::CopulaError| e.to_string())?;
    Ok(spec.param_names().join(","))
}

/// Row-major `m x m` values at cell centres `((i + 0.5)/m, (j + 0.5)/m)`, `u` along
/// rows. `what` is `"density"`, `"log-density"` or `"cdf"`.
pub fn surface(spec: &str, params: &[f64], m: usize, what: &str) -> Result<Vec<f64>, String> {
    if m == 0 || m > MAX_GRID {
        return Err(format!("grid size must be in 1..={MAX_GRID}"));
    }
    let (_, model) = build(spec, params)?;
    let mut out = Vec::with_capacity(m * m);
    for i in 0..m {
        let u = (i as f64 + 0.5) / m as f64;
        for j in 0..m {
            let v = (j as f64 + 0.5) / m as f64;
            let z = match what {
                "density" => model.density(u, v).map_err(|e| e.to_string())?,
                "log-density" => model.log_density(u, v).map_err(|e| e.to_string())?,
                "cdf" => model.cdf(u, v),
                other => return Err(format!("unknown surface '{other}'")),
            };
            out.push(z);
        }
    }
    Ok(out)
}

/// `n` draws interleaved as `u0, v0, u1, v1, ...`.
pub fn sample(spec: &str, params: &[f64], n: usize, seed: u64) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_SAMPLE {
        return Err(format!("sample size must be in 1..={MAX_SAMPLE}"));
    }
    let (_, model) = build(spec, params)?;
    let set = sample_model(n, &model, seed).map_err(|e| e.to_string())?;
    Ok(set.pairs.iter().flat_map(|&(u, v)| [u, v]).collect())
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub model: String,
    pub kendall_tau: f64,
    pub lambda_upper_closed: Option<f64>,
    pub lambda_lower_closed: Option<f64>,
    pub upper_probe: Vec<(f64, f64)>,
    pub lower_probe: Vec<(f64, f64)>,
}

pub fn summary(spec: &str, params: &[f64]) -> Result<Summary, String> {
    let (_, model) = build(spec, params)?;
    let closed = closed_form_tails(&model);
    let upper = numerical_tail_probe(&model, TailSide::Upper, &DEFAULT_UPPER_PROBES).map_err(|e| e.to_string())?;
    let lower = numerical_tail_probe(&model, TailSide::Lower, &DEFAULT_LOWER_PROBES).map_err(|e| e.to_string())?;
    Ok(Summary {
        model: model.to_string(),
        kendall_tau: kendall_tau_quadrature(&model),
        lambda_upper_closed: closed.as_ref().and_then(|c| c.lambda_upper),
        lambda_lower_closed: closed.as_ref().and_then(|c| c.lambda_lower),
        upper_probe: upper.probe_points,
        lower_probe: lower.probe_points,
    })
}

#[wasm_bindgen(js_name = paramNames)]
pub fn param_names_js(spec: &str) -> Result<String, JsError> {
    param_names(spec).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = surface)]
pub fn surface_js(spec: &str, params: &[f64], m: usize, what: &str) -> Result<Vec<f64>, JsError> {
    surface(spec, params, m, what).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sample)]
pub fn sample_js(spec: &str, params: &[f64], n: usize, seed: u32) -> Result<Vec<f64>, JsError> {
    sample(spec, params, n, u64::from(seed)).map_err(|e| JsError::new(&e))
}

/// Summary as a JSON string.
#[wasm_bindgen(js_name = summary)]
pub fn summary_js(spec: &str, params: &[f64]) -> Result<String, JsError> {
    let s = summary(spec, params).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&s).map_err(|e| JsError::new(&e.to_string()))
}

//! Two-stage (IFM) estimation: margins first, then copula parameters by
//! maximum likelihood over a nested ladder of models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::construct::{asymmetrize, asymmetrize_survival_clayton, frailty_mix, AsymmetryParams};
use crate::copula::{CopulaModel, EDGE};
use crate::error::{CopulaError, Result};
use crate::margins::MarginModel;
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::sample::SampleSet;
use crate::stats::kendall_tau;

/// Base family of a ladder. `Clayton` is fitted in its survival form, with the
/// asymmetry applied on the survival side so the upper tail stays dependent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseFamily {
    Plackett,
    Gumbel,
    Clayton,
}

/// Rung of the nesting ladder: `alpha`; plus asymmetry; plus frailty `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Base,
    Asymmetric,
    Mixed,
}

/// Which coordinate carries the asymmetry exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AsymSide {
    /// `theta` on `u`, `delta = 1`.
    U,
    /// `delta` on `v`, `theta = 1`.
    V,
    /// Both `theta` and `delta` free.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: BaseFamily,
    pub level: Level,
    pub side: AsymSide,
}

/// How a parameter's box is mapped onto the real line for the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scale {
    Linear,
    Log,
    /// `ln(1 + x)`, for Plackett's `alpha > -1`.
    Log1p,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
    pub scale: Scale,
    /// Value at which the parameter switches its transform off.
    pub nested_at: Option<f64>,
}

impl ParamBox {
    fn g(&self, x: f64) -> f64 {
        match self.scale {
            Scale::Linear => x,
            Scale::Log => x.ln(),
            Scale::Log1p => x.ln_1p(),
        }
    }

    fn g_inv(&self, y: f64) -> f64 {
        match self.scale {
            Scale::Linear => y,
            Scale::Log => y.exp(),
            Scale::Log1p => y.exp_m1(),
        }
    }

    pub fn to_free(&self, x: f64) -> f64 {
        let (gl, gh) = (self.g(self.lower), self.g(self.upper));
        let t = ((self.g(x.clamp(self.lower, self.upper)) - gl) / (gh - gl)).clamp(1e-12, 1.0 - 1e-12);
        (t / (1.0 - t)).ln()
    }

    pub fn from_free(&self, z: f64) -> f64 {
        let (gl, gh) = (self.g(self.lower), self.g(self.upper));
        let t = 1.0 / (1.0 + (-z).exp());
        self.g_inv(gl + t * (gh - gl)).clamp(self.lower, self.upper)
    }

    /// Distance to the nearest box edge or nesting value below which the
    /// estimate counts as degenerate.
    pub fn is_degenerate(&self, x: f64) -> bool {
        let near = |edge: f64| (x - edge).abs() < 1e-3 * edge.abs().max(1.0);
        self.nested_at.is_some_and(near) || near(self.lower) || near(self.upper)
    }
}

const BETA_BOX: ParamBox = ParamBox {
    name: "beta",
    lower: 1e-6,
    upper: 10.0,
    scale: Scale::Log,
    nested_at: Some(0.0),
};
const THETA_BOX: ParamBox = ParamBox {
    name: "theta",
    lower: 0.0,
    upper: 1.0,
    scale: Scale::Linear,
    nested_at: Some(1.0),
};
const DELTA_BOX: ParamBox = ParamBox {
    name: "delta",
    ..THETA_BOX
};

impl BaseFamily {
    pub const ALL: [BaseFamily; 3] = [BaseFamily::Plackett, BaseFamily::Gumbel, BaseFamily::Clayton];

    pub fn alpha_box(self) -> ParamBox {
        match self {
            BaseFamily::Plackett => ParamBox {
                name: "alpha",
                lower: -0.99,
                upper: 1e4,
                scale: Scale::Log1p,
                nested_at: Some(0.0),
            },
            BaseFamily::Gumbel => ParamBox {
                name: "alpha",
                lower: 0.01,
                upper: 1.0,
                scale: Scale::Linear,
                nested_at: Some(1.0),
            },
            BaseFamily::Clayton => ParamBox {
                name: "alpha",
                lower: 1e-4,
                upper: 100.0,
                scale: Scale::Log,
                nested_at: Some(0.0),
            },
        }
    }

    /// Rough inversion of Kendall's tau, used to seed the optimizer.
    fn alpha_from_tau(self, tau: f64) -> f64 {
        let tau = if tau.is_finite() { tau.clamp(-0.9, 0.95) } else { 0.3 };
        match self {
            BaseFamily::Plackett => ((1.0 + tau) / (1.0 - tau)).powf(2.2) - 1.0,
            BaseFamily::Gumbel => (1.0 - tau).clamp(0.05, 0.98),
            BaseFamily::Clayton => (2.0 * tau / (1.0 - tau)).max(0.05),
        }
    }

    /// Independence-adjacent, moderate and strong dependence values of `alpha`.
    fn alpha_ladder(self) -> [f64; 3] {
        match self {
            BaseFamily::Plackett => [0.5, 4.0, 20.0],
            BaseFamily::Gumbel => [0.9, 0.6, 0.3],
            BaseFamily::Clayton => [0.2, 1.0, 4.0],
        }
    }
}

impl ModelSpec {
    pub fn new(family: BaseFamily, level: Level, side: AsymSide) -> Self {
        Self { family, level, side }.canonical()
    }

    /// Base models carry no asymmetry, so their side is normalised to `V`.
    pub fn canonical(self) -> Self {
        if self.level == Level::Base {
            Self {
                side: AsymSide::V,
                ..self
            }
        } else {
            self
        }
    }

    /// All nine family x level models with the given asymmetry side.
    pub fn grid(side: AsymSide) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for family in BaseFamily::ALL {
            for level in [Level::Base, Level::Asymmetric, Level::Mixed] {
                out.push(ModelSpec::new(family, level, side));
            }
        }
        out
    }

    /// Parameter boxes in the order `beta, theta, delta, alpha`.
    pub fn boxes(&self) -> Vec<ParamBox> {
        let mut out = Vec::with_capacity(4);
        if self.level == Level::Mixed {
            out.push(BETA_BOX);
        }
        if self.level != Level::Base {
            if matches!(self.side, AsymSide::U | AsymSide::Both) {
                out.push(THETA_BOX);
            }
            if matches!(self.side, AsymSide::V | AsymSide::Both) {
                out.push(DELTA_BOX);
            }
        }
        out.push(self.family.alpha_box());
        out
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        self.boxes().iter().map(|b| b.name).collect()
    }

    pub fn n_params(&self) -> usize {
        self.boxes().len()
    }

    /// Builds the copula for a parameter vector ordered as [`ModelSpec::param_names`].
    pub fn build(&self, params: &[f64]) -> Result<CopulaModel> {
        let names = self.param_names();
        if params.len() != names.len() {
            return Err(CopulaError::Contract(format!(
                "{self} takes {} parameters, got {}",
                names.len(),
                params.len()
            )));
        }
        let get = |name: &str, default: f64| names.iter().position(|n| *n == name).map_or(default, |i| params[i]);
        let (beta, theta, delta, alpha) = (
            get("beta", 0.0),
            get("theta", 1.0),
            get("delta", 1.0),
            get("alpha", f64::NAN),
        );
        let asym = match self.family {
            BaseFamily::Plackett => asymmetrize(CopulaModel::plackett(alpha)?, AsymmetryParams::new(theta, delta)?)?,
            BaseFamily::Gumbel => asymmetrize(CopulaModel::gumbel(alpha)?, AsymmetryParams::new(theta, delta)?)?,
            BaseFamily::Clayton => asymmetrize_survival_clayton(alpha, theta, delta)?,
        };
        frailty_mix(asym, beta)
    }

    /// The next rung down the ladder, if any.
    pub fn restricted(&self) -> Option<ModelSpec> {
        let level = match self.level {
            Level::Base => return None,
            Level::Asymmetric => Level::Base,
            Level::Mixed => Level::Asymmetric,
        };
        Some(ModelSpec { level, ..*self }.canonical())
    }

    /// True when `self` is obtained from `other` by pinning some of its
    /// parameters at their nesting values.
    pub fn nested_in(&self, other: &ModelSpec) -> bool {
        if self.family != other.family {
            return false;
        }
        let mine = self.param_names();
        let theirs = other.param_names();
        mine.len() < theirs.len() && mine.iter().all(|n| theirs.contains(n))
    }

    /// Embeds a restricted estimate into this spec's parameter space, with
    /// newly freed parameters at `fill` (name, value) or exactly at their nesting
    /// values. The nesting value may sit outside the optimizer box: `beta = 0`
    /// is the inner copula itself, whereas `beta -> 0+` tends to the
    /// extreme-value limit of its upper tail, so clamping would change the model.
    fn embed(&self, from: &ModelSpec, params: &[f64], fill: &[(&str, f64)]) -> Vec<f64> {
        let src = from.param_names();
        self.boxes()
            .iter()
            .map(|b| {
                if let Some(i) = src.iter().position(|n| *n == b.name) {
                    params[i]
                } else if let Some((_, v)) = fill.iter().find(|(n, _)| *n == b.name) {
                    *v
                } else {
                    b.nested_at.unwrap_or(b.lower)
                }
            })
            .collect()
    }

    pub fn level_number(&self) -> usize {
        match self.level {
            Level::Base => 1,
            Level::Asymmetric => 2,
            Level::Mixed => 3,
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = match self.family {
            BaseFamily::Plackett => "plackett",
            BaseFamily::Gumbel => "gumbel",
            BaseFamily::Clayton => "clayton",
        };
        let side = match self.side {
            AsymSide::U => "u",
            AsymSide::V => "v",
            AsymSide::Both => "both",
        };
        if self.level == Level::Base {
            write!(f, "{fam}:1")
        } else {
            write!(f, "{fam}:{}:{side}", self.level_number())
        }
    }
}

impl FromStr for BaseFamily {
    type Err = CopulaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plackett" => Ok(BaseFamily::Plackett),
            "gumbel" => Ok(BaseFamily::Gumbel),
            "clayton" => Ok(BaseFamily::Clayton),
            other => Err(CopulaError::Contract(format!("unknown family '{other}'"))),
        }
    }
}

impl FromStr for AsymSide {
    type Err = CopulaError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "u" => Ok(AsymSide::U),
            "v" => Ok(AsymSide::V),
            "both" => Ok(AsymSide::Both),
            other => Err(CopulaError::Contract(format!(
                "unknown asymmetry side '{other}' (u, v or both)"
            ))),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = CopulaError;
    /// `family:level[:side]` with level 1..3, e.g. `clayton:3:v`; side defaults to `v`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.is_empty() || parts.len() > 3 {
            return Err(CopulaError::Contract(format!("bad model spec '{s}'")));
        }
        let family = parts[0].parse()?;
        let level = match parts.get(1).map(|p| p.trim()) {
            None | Some("1") => Level::Base,
            Some("2") => Level::Asymmetric,
            Some("3") => Level::Mixed,
            Some(other) => {
                return Err(CopulaError::Contract(format!(
                    "bad level '{other}' in '{s}' (1, 2 or 3)"
                )))
            }
        };
        let side = match parts.get(2) {
            Some(p) => p.parse()?,
            None => AsymSide::V,
        };
        Ok(ModelSpec::new(family, level, side))
    }
}

/// `-2 loglik + p ln n`.
pub fn bic(loglik: f64, p: usize, n: usize) -> f64 {
    -2.0 * loglik + p as f64 * (n as f64).ln()
}

/// Precomputed `-ln u`, `-ln v` of the pseudo-observations.
#[derive(Debug, Clone)]
pub struct LogLikelihood {
    a: Vec<f64>,
    b: Vec<f64>,
    offset: f64,
}

impl LogLikelihood {
    pub fn new(pairs: &[(f64, f64)]) -> Self {
        let a: Vec<f64> = pairs.iter().map(|p| -p.0.clamp(EDGE, 1.0 - EDGE).ln()).collect();
        let b: Vec<f64> = pairs.iter().map(|p| -p.1.clamp(EDGE, 1.0 - EDGE).ln()).collect();
        let offset = a.iter().sum::<f64>() + b.iter().sum::<f64>();
        Self { a, b, offset }
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// `sum ln c(u_i, v_i)`; `-inf` if any term is not finite.
    pub fn eval(&self, model: &CopulaModel) -> f64 {
        let mut acc = self.offset;
        for (&a, &b) in self.a.iter().zip(&self.b) {
            let lp = model.log_partials(a, b);
            let term = lp.kernel.ln() - lp.l;
            if !term.is_finite() {
                return f64::NEG_INFINITY;
            }
            acc += term;
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub stderr: Option<f64>,
    /// Within `1e-3` of a box edge or the value that switches the parameter off.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub model: CopulaModel,
    pub params: Vec<ParamEstimate>,
    pub loglik: f64,
    pub bic: f64,
    /// Hessian of the log-likelihood over `hessian_params` (the non-boundary parameters).
    pub hessian: Vec<Vec<f64>>,
    pub hessian_params: Vec<String>,
    pub converged: bool,
    /// Some parameter sits at its nesting value; the standard errors reported are
    /// those of the restricted model with that parameter pinned.
    pub degenerate: bool,
    pub n_eval: usize,
    pub n_obs: usize,
    pub diagnostics: Vec<String>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&ParamEstimate> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.value).collect()
    }

    /// Standard errors of all parameters, present only when every one is available.
    pub fn stderr(&self) -> Option<Vec<f64>> {
        self.params.iter().map(|p| p.stderr).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Number of built-in starting points (at most 5).
    pub starts: usize,
    /// Extra user starting point in parameter order.
    pub init: Option<Vec<f64>>,
    /// Estimate of the next rung down, lifted into this model as an extra start
    /// and used as a floor for the final log-likelihood.
    pub restricted: Option<FitResult>,
    /// Evaluation budget per exploratory start.
    pub explore_evals: usize,
    /// Budget of the final polish.
    pub polish: NelderMeadOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            init: None,
            restricted: None,
            explore_evals: 120,
            polish: NelderMeadOptions {
                max_evals: 3000,
                ftol: 1e-11,
                xtol: 1e-6,
                initial_step: 0.3,
                restarts: 1,
            },
        }
    }
}

/// Deterministic starting points spanning weak to strong dependence.
fn default_starts(spec: &ModelSpec, tau: f64) -> Vec<Vec<f64>> {
    let [weak, moderate, strong] = spec.family.alpha_ladder();
    let from_tau = spec.family.alpha_from_tau(tau);
    let rows = [
        (from_tau, 0.9, 0.1),
        (weak, 0.97, 0.03),
        (moderate, 0.8, 0.3),
        (strong, 0.6, 0.8),
        (from_tau, 0.6, 0.03),
    ];
    rows.iter()
        .map(|&(alpha, asym, beta)| {
            spec.boxes()
                .iter()
                .map(|b| match b.name {
                    "beta" => beta,
                    "theta" | "delta" => asym,
                    _ => alpha,
                })
                .collect()
        })
        .collect()
}

/// Maximum-likelihood fit of `spec` to pseudo-observations with default options.
pub fn fit_copula_ml(pseudo: &[(f64, f64)], spec: ModelSpec, init: Option<&[f64]>) -> Result<FitResult> {
    let opts = FitOptions {
        init: init.map(<[f64]>::to_vec),
        ..Default::default()
    };
    fit_copula_ml_with(pseudo, spec, &opts)
}

pub fn fit_copula_ml_with(pseudo: &[(f64, f64)], spec: ModelSpec, opts: &FitOptions) -> Result<FitResult> {
    let n = pseudo.len();
    if n < 2 {
        return Err(CopulaError::InsufficientData(format!("{n} pseudo-observations")));
    }
    let ll = LogLikelihood::new(pseudo);
    let boxes = spec.boxes();
    let to_free = |x: &[f64]| -> Vec<f64> { x.iter().zip(&boxes).map(|(v, b)| b.to_free(*v)).collect() };
    let from_free = |z: &[f64]| -> Vec<f64> { z.iter().zip(&boxes).map(|(v, b)| b.from_free(*v)).collect() };
    let objective = |z: &[f64]| -> f64 {
        match spec.build(&from_free(z)) {
            Ok(m) => -ll.eval(&m),
            Err(_) => f64::INFINITY,
        }
    };

    let mut diagnostics = Vec::new();
    let mut starts: Vec<(String, Vec<f64>)> = default_starts(&spec, kendall_tau(pseudo))
        .into_iter()
        .take(opts.starts.min(5))
        .enumerate()
        .map(|(i, s)| (format!("start {}", i + 1), s))
        .collect();
    if let Some(init) = &opts.init {
        if init.len() == boxes.len() {
            starts.push(("user init".into(), init.clone()));
        } else {
            diagnostics.push(format!(
                "user init ignored: expected {} values, got {}",
                boxes.len(),
                init.len()
            ));
        }
    }
    let mut floor: Option<Vec<f64>> = None;
    if let Some(r) = &opts.restricted {
        if r.spec.nested_in(&spec) && r.n_obs == n {
            starts.push((
                "lifted restricted".into(),
                spec.embed(
                    &r.spec,
                    &r.values(),
                    &[("beta", 0.05), ("theta", 0.95), ("delta", 0.95)],
                ),
            ));
            floor = Some(spec.embed(&r.spec, &r.values(), &[]));
        } else {
            diagnostics.push(format!("restricted fit {} is not nested in {spec}; not lifted", r.spec));
        }
    }

    let explore = NelderMeadOptions {
        max_evals: opts.explore_evals.max(boxes.len() + 2),
        ftol: 1e-7,
        xtol: 1e-4,
        initial_step: 0.5,
        restarts: 0,
    };
    let mut n_eval = 0;
    let mut explored: Vec<(f64, Vec<f64>)> = Vec::new();
    for (label, start) in &starts {
        let z0 = to_free(start);
        if !objective(&z0).is_finite() {
            diagnostics.push(format!("{label}: density not finite at {start:?}, start aborted"));
            n_eval += 1;
            continue;
        }
        let m = nelder_mead(objective, &z0, &explore);
        n_eval += m.n_eval;
        if m.fx.is_finite() {
            explored.push((m.fx, m.x));
        } else {
            diagnostics.push(format!("{label}: no finite log-likelihood reached"));
        }
    }
    if explored.is_empty() {
        return Err(CopulaError::NotConverged(format!(
            "{spec}: every start failed; {}",
            diagnostics.join("; ")
        )));
    }
    explored.sort_by(|a, b| a.0.total_cmp(&b.0));
    // polish the two best distinct basins
    let mut best: Option<(f64, Vec<f64>, bool)> = None;
    let mut polished: Vec<Vec<f64>> = Vec::new();
    for (_, z) in &explored {
        if polished.len() == 2 {
            break;
        }
        if polished
            .iter()
            .any(|p| p.iter().zip(z).all(|(a, b)| (a - b).abs() < 1e-2))
        {
            continue;
        }
        polished.push(z.clone());
        let m = nelder_mead(objective, z, &opts.polish);
        n_eval += m.n_eval;
        if best.as_ref().is_none_or(|b| m.fx < b.0) {
            best = Some((m.fx, m.x, m.converged));
        }
    }
    let (neg_ll, z, converged) = best.expect("at least one polished start");
    let mut values = from_free(&z);
    let mut loglik = -neg_ll;
    if let Some(exact) = floor {
        let m = spec.build(&exact)?;
        let ll_r = ll.eval(&m);
        n_eval += 1;
        if ll_r > loglik {
            diagnostics.push("restricted optimum beats the free search; estimate pinned at the nesting values".into());
            values = exact;
            loglik = ll_r;
        }
    }
    if !converged {
        diagnostics.push("simplex did not meet tolerance within its budget".into());
    }
    let model = spec.build(&values)?;
    let boundary: Vec<bool> = values.iter().zip(&boxes).map(|(v, b)| b.is_degenerate(*v)).collect();
    let degenerate = boundary.iter().zip(&boxes).any(|(at, b)| *at && b.nested_at.is_some());

    let free: Vec<usize> = (0..boxes.len()).filter(|&i| !boundary[i]).collect();
    let (hessian, evals) = hessian_fd(&ll, &spec, &boxes, &values, &free);
    n_eval += evals;
    let stderr = stderr_from_hessian(&hessian);
    if stderr.is_none() && !free.is_empty() {
        diagnostics.push("Hessian not negative definite at the optimum; standard errors withheld".into());
    }
    if degenerate {
        let pinned: Vec<&str> = boxes
            .iter()
            .zip(&boundary)
            .filter(|(_, at)| **at)
            .map(|(b, _)| b.name)
            .collect();
        diagnostics.push(format!(
            "degenerate at {}: standard errors are those of the restricted model",
            pinned.join(", ")
        ));
    }
    let params = boxes
        .iter()
        .enumerate()
        .map(|(i, b)| ParamEstimate {
            name: b.name.to_string(),
            value: values[i],
            lower: b.lower,
            upper: b.upper,
            stderr: free
                .iter()
                .position(|&j| j == i)
                .and_then(|k| stderr.as_ref().map(|s| s[k])),
            at_boundary: boundary[i],
        })
        .collect();
    Ok(FitResult {
        spec,
        model,
        params,
        loglik,
        bic: bic(loglik, boxes.len(), n),
        hessian: (0..hessian.nrows())
            .map(|i| hessian.row(i).iter().copied().collect())
            .collect(),
        hessian_params: free.iter().map(|&i| boxes[i].name.to_string()).collect(),
        converged,
        degenerate,
        n_eval,
        n_obs: n,
        diagnostics,
    })
}

/// Central-difference Hessian of the log-likelihood in the original
/// parameter space over the indices in `free`.
fn hessian_fd(
    ll: &LogLikelihood,
    spec: &ModelSpec,
    boxes: &[ParamBox],
    x: &[f64],
    free: &[usize],
) -> (DMatrix<f64>, usize) {
    let k = free.len();
    let mut evals = 0;
    let mut f = |p: &[f64]| -> f64 {
        evals += 1;
        spec.build(p).map_or(f64::NEG_INFINITY, |m| ll.eval(&m))
    };
    let steps: Vec<f64> = free
        .iter()
        .map(|&i| {
            let b = &boxes[i];
            let h = 1e-4 * (1.0 + x[i].abs());
            h.min(0.5 * (x[i] - b.lower)).min(0.5 * (b.upper - x[i]))
        })
        .collect();
    let f0 = f(x);
    let mut h = DMatrix::zeros(k, k);
    let shifted = |deltas: &[(usize, f64)]| -> Vec<f64> {
        let mut p = x.to_vec();
        for &(i, d) in deltas {
            p[i] += d;
        }
        p
    };
    for a in 0..k {
        let (i, hi) = (free[a], steps[a]);
        let fp = f(&shifted(&[(i, hi)]));
        let fm = f(&shifted(&[(i, -hi)]));
        h[(a, a)] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for c in 0..a {
            let (j, hj) = (free[c], steps[c]);
            let fpp = f(&shifted(&[(i, hi), (j, hj)]));
            let fpm = f(&shifted(&[(i, hi), (j, -hj)]));
            let fmp = f(&shifted(&[(i, -hi), (j, hj)]));
            let fmm = f(&shifted(&[(i, -hi), (j, -hj)]));
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            h[(a, c)] = v;
            h[(c, a)] = v;
        }
    }
    (h, evals)
}

/// Square roots of the diagonal of `(-H)^-1` when `-H` is positive definite.
fn stderr_from_hessian(h: &DMatrix<f64>) -> Option<Vec<f64>> {
    if h.nrows() == 0 || h.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let info = -h.clone();
    let chol = info.cholesky()?;
    let cov = chol.inverse();
    (0..cov.nrows())
        .map(|i| {
            let v = cov[(i, i)];
            (v > 0.0).then(|| v.sqrt())
        })
        .collect()
}

/// Fits every spec in `specs`. Each family/side chain is fitted bottom-up so
/// lower rungs can be lifted into higher ones; chains run on at most
/// `workers` threads. The result for a spec does not depend on which other
/// specs were requested, their order, or the worker count.
pub fn fit_grid(
    pseudo: &[(f64, f64)],
    specs: &[ModelSpec],
    opts: &FitOptions,
    workers: usize,
) -> Vec<(ModelSpec, Result<FitResult>)> {
    let mut chains: BTreeMap<(BaseFamily, AsymSide), Level> = BTreeMap::new();
    for s in specs {
        let s = s.canonical();
        let top = chains.entry((s.family, s.side)).or_insert(s.level);
        *top = (*top).max(s.level);
    }
    let jobs: Vec<ModelSpec> = chains
        .iter()
        .map(|(&(family, side), &level)| ModelSpec { family, level, side })
        .collect();
    let next = AtomicUsize::new(0);
    let done: Mutex<BTreeMap<ModelSpec, Result<FitResult>>> = Mutex::new(BTreeMap::new());
    let workers = workers.clamp(1, jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&top) = jobs.get(i) else { break };
                let chain = fit_chain(pseudo, top, opts);
                done.lock().expect("no worker panicked").extend(chain);
            });
        }
    });
    let done = done.into_inner().expect("no worker panicked");
    specs
        .iter()
        .map(|&s| {
            let r = done
                .get(&s.canonical())
                .cloned()
                .expect("every requested spec has a chain")
                .map(|mut f| {
                    f.spec = s;
                    f
                });
            (s, r)
        })
        .collect()
}

/// Fits `top` and every rung below it, lifting each optimum into the next.
fn fit_chain(pseudo: &[(f64, f64)], top: ModelSpec, opts: &FitOptions) -> Vec<(ModelSpec, Result<FitResult>)> {
    let mut out = Vec::new();
    let mut below: Option<FitResult> = None;
    for level in [Level::Base, Level::Asymmetric, Level::Mixed] {
        if level > top.level {
            break;
        }
        let spec = ModelSpec { level, ..top }.canonical();
        let local = FitOptions {
            restricted: below
                .take()
                .or_else(|| opts.restricted.clone().filter(|r| r.spec.nested_in(&spec))),
            ..opts.clone()
        };
        let r = fit_copula_ml_with(pseudo, spec, &local);
        below = r.as_ref().ok().cloned();
        out.push((spec, r));
    }
    out
}

/// Worker count for grid fits: the available parallelism, capped at 4.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Likelihood-ratio statistic `-2 (ll_restricted - ll_full)` with its chi-square
/// upper-tail p-value.
pub fn lr_statistic(ll_restricted: f64, ll_full: f64, df: usize) -> Result<LrTest> {
    if df == 0 {
        return Err(CopulaError::Contract("likelihood-ratio test needs df >= 1".into()));
    }
    let statistic = -2.0 * (ll_restricted - ll_full);
    let chi = ChiSquared::new(df as f64).map_err(|e| CopulaError::Contract(e.to_string()))?;
    let p_value = if statistic <= 0.0 { 1.0 } else { chi.sf(statistic) };
    Ok(LrTest { statistic, df, p_value })
}

pub fn lr_test(restricted: &FitResult, full: &FitResult) -> Result<LrTest> {
    if restricted.spec == full.spec && restricted.n_obs == full.n_obs {
        return Ok(LrTest {
            statistic: -2.0 * (restricted.loglik - full.loglik),
            df: 0,
            p_value: 1.0,
        });
    }
    if !restricted.spec.nested_in(&full.spec) {
        return Err(CopulaError::Contract(format!(
            "{} is not nested in {}",
            restricted.spec, full.spec
        )));
    }
    if restricted.n_obs != full.n_obs {
        return Err(CopulaError::Contract("fits use different data".into()));
    }
    lr_statistic(
        restricted.loglik,
        full.loglik,
        full.params.len() - restricted.params.len(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    /// Upper tail dependence coefficient.
    pub lambda: f64,
    pub stderr: f64,
}

/// Upper tail index with its delta-method standard error for a one-parameter
/// survival-Clayton (`2^(-1/alpha)`) or Gumbel (`2 - 2^alpha`) estimate.
pub fn tail_delta_method(family: BaseFamily, alpha: f64, sd_alpha: f64) -> Result<TailEstimate> {
    let ln2 = std::f64::consts::LN_2;
    let (lambda, slope) = match family {
        BaseFamily::Clayton => {
            let l = crate::tails::lambda_upper_clayton_survival(alpha)?;
            (l, ln2 * l / (alpha * alpha))
        }
        BaseFamily::Gumbel => (crate::tails::lambda_upper_gumbel(alpha)?, -ln2 * 2f64.powf(alpha)),
        BaseFamily::Plackett => {
            return Err(CopulaError::NoClosedForm(
                "Plackett has no tail dependence to estimate".into(),
            ))
        }
    };
    Ok(TailEstimate {
        lambda,
        stderr: slope.abs() * sd_alpha,
    })
}

pub fn tail_estimate(fit: &FitResult) -> Result<TailEstimate> {
    if fit.spec.level != Level::Base || fit.spec.family == BaseFamily::Plackett {
        return Err(CopulaError::NoClosedForm(format!(
            "{}: use tails::numerical_tail_probe for transformed models",
            fit.spec
        )));
    }
    let alpha = fit.param("alpha").expect("base models carry alpha");
    let sd = alpha
        .stderr
        .ok_or_else(|| CopulaError::Contract(format!("{} has no standard error for alpha", fit.spec)))?;
    tail_delta_method(fit.spec.family, alpha.value, sd)
}

/// `(F1(x_i), F2(y_i))` clipped into the open unit square.
pub fn pseudo_observations(data: &[(f64, f64)], m1: &MarginModel, m2: &MarginModel) -> SampleSet {
    SampleSet {
        pairs: data.iter().map(|&(x, y)| (m1.cdf(x), m2.cdf(y))).collect(),
        seed: 0,
        model_tag: "pseudo-observations".into(),
        method: "margins".into(),
        diagnostics: vec![],
    }
}

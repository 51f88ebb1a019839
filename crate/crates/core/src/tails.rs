//! Tail-dependence indices, the logistic Pickands function, closed-form Kendall's
//! tau and numerical diagonal probes.

use serde::{Deserialize, Serialize};

use crate::construct::{asymmetrize_one_sided, frailty_mix};
use crate::copula::CopulaModel;
use crate::error::{check_range, CopulaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailMethod {
    ClosedForm,
    NumericalLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub lambda_upper: Option<f64>,
    pub lambda_lower: Option<f64>,
    pub method: TailMethod,
    /// `(u, ratio)` pairs in the order the probes were given.
    pub probe_points: Vec<(f64, f64)>,
    /// False when the probe sequence changes direction.
    pub monotone: bool,
}

pub const DEFAULT_LOWER_PROBES: [f64; 6] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];
pub const DEFAULT_UPPER_PROBES: [f64; 5] = [1.0 - 1e-2, 1.0 - 1e-3, 1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6];

/// Upper tail index `2^(-1/alpha)` of the survival Clayton copula.
pub fn lambda_upper_clayton_survival(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || alpha.is_nan() {
        return Err(CopulaError::Domain {
            name: "alpha",
            value: alpha,
            domain: "(0, inf)",
        });
    }
    Ok(2f64.powf(-1.0 / alpha))
}

/// Lower tail index of Clayton, identical to [`lambda_upper_clayton_survival`].
pub fn lambda_lower_clayton(alpha: f64) -> Result<f64> {
    lambda_upper_clayton_survival(alpha)
}

/// Upper tail index `2 - 2^alpha` of Gumbel's copula.
pub fn lambda_upper_gumbel(alpha: f64) -> Result<f64> {
    CopulaModel::gumbel(alpha)?;
    Ok(2.0 - 2f64.powf(alpha))
}

/// Pickands dependence function of `u^(1-theta) v^(1-delta) Gumbel(u^theta, v^delta)`,
/// with `t = ln u / ln(uv)`.
pub fn pickands_a_logistic(t: f64, alpha: f64, theta: f64, delta: f64) -> Result<f64> {
    check_range("t", t, 0.0, 1.0, "[0, 1]")?;
    CopulaModel::gumbel(alpha)?;
    check_range("theta", theta, 0.0, 1.0, "[0, 1]")?;
    check_range("delta", delta, 0.0, 1.0, "[0, 1]")?;
    let s = 1.0 - t;
    let x = theta * t;
    let y = delta * s;
    let m = x.max(y);
    let joint = if m > 0.0 {
        m * ((x / m).powf(1.0 / alpha) + (y / m).powf(1.0 / alpha)).powf(alpha)
    } else {
        0.0
    };
    Ok((1.0 - theta) * t + (1.0 - delta) * s + joint)
}

/// Whether a tau value is the model's exact Kendall's tau or only an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauKind {
    Exact,
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedTau {
    pub value: f64,
    pub kind: TauKind,
}

/// Kendall's tau ceiling `theta delta / (theta + delta - theta delta)` implied
/// by the asymmetrization exponents.
pub fn cuadras_auge_bound(theta: f64, delta: f64) -> Result<f64> {
    check_range("theta", theta, 0.0, 1.0, "[0, 1]")?;
    check_range("delta", delta, 0.0, 1.0, "[0, 1]")?;
    let den = theta + delta - theta * delta;
    Ok(if den > 0.0 { theta * delta / den } else { 0.0 })
}

/// Kendall's tau in closed form where one exists. Asymmetrized models report the
/// Cuadras-Auge ceiling flagged as [`TauKind::Bound`].
pub fn kendall_tau_closed(model: &CopulaModel) -> Result<ClosedTau> {
    model.validate()?;
    let exact = |value| {
        Ok(ClosedTau {
            value,
            kind: TauKind::Exact,
        })
    };
    match model {
        CopulaModel::Independence => exact(0.0),
        CopulaModel::Clayton { alpha } | CopulaModel::ClaytonSurvival { alpha } => exact(alpha / (alpha + 2.0)),
        CopulaModel::Gumbel { alpha } => exact(1.0 - alpha),
        CopulaModel::Asymmetrized { theta, delta, .. } => Ok(ClosedTau {
            value: cuadras_auge_bound(*theta, *delta)?,
            kind: TauKind::Bound,
        }),
        CopulaModel::Survival { inner } => kendall_tau_closed(inner),
        CopulaModel::Plackett { .. } | CopulaModel::FrailtyMixed { .. } => {
            Err(CopulaError::NoClosedForm(format!("Kendall's tau of {model}")))
        }
    }
}

fn is_monotone(points: &[(f64, f64)]) -> bool {
    let diffs: Vec<f64> = points.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let tol = 1e-12;
    diffs.iter().all(|d| *d <= tol) || diffs.iter().all(|d| *d >= -tol)
}

/// Diagonal ratios `C(u,u)/u` (lower) or `(1 - 2u + C(u,u))/(1 - u)` (upper) at
/// each probe. The reported index is the ratio at the probe nearest the limit;
/// nothing is extrapolated.
pub fn numerical_tail_probe(model: &CopulaModel, side: TailSide, probes: &[f64]) -> Result<TailReport> {
    let mut points = Vec::with_capacity(probes.len());
    for &u in probes {
        if !(u > 0.0 && u < 1.0) {
            return Err(CopulaError::Boundary { u, v: u });
        }
        let c = model.cdf(u, u);
        let ratio = match side {
            TailSide::Lower => c / u,
            TailSide::Upper => (1.0 - 2.0 * u + c) / (1.0 - u),
        };
        if !ratio.is_finite() {
            return Err(CopulaError::Numeric {
                what: "tail ratio",
                u,
                v: u,
                model: model.to_string(),
            });
        }
        points.push((u, ratio));
    }
    let nearest = match side {
        TailSide::Lower => points.iter().min_by(|a, b| a.0.total_cmp(&b.0)),
        TailSide::Upper => points.iter().max_by(|a, b| a.0.total_cmp(&b.0)),
    }
    .map(|p| p.1.clamp(0.0, 1.0));
    let (lambda_lower, lambda_upper) = match side {
        TailSide::Lower => (nearest, None),
        TailSide::Upper => (None, nearest),
    };
    Ok(TailReport {
        lambda_upper,
        lambda_lower,
        method: TailMethod::NumericalLimit,
        monotone: is_monotone(&points),
        probe_points: points,
    })
}

/// Closed-form tail indices where the model has them.
pub fn closed_form_tails(model: &CopulaModel) -> Option<TailReport> {
    let (upper, lower) = match *model {
        CopulaModel::Independence => (0.0, 0.0),
        CopulaModel::Clayton { alpha } if alpha > 0.0 => (0.0, 2f64.powf(-1.0 / alpha)),
        CopulaModel::ClaytonSurvival { alpha } if alpha > 0.0 => (2f64.powf(-1.0 / alpha), 0.0),
        CopulaModel::Gumbel { alpha } => (2.0 - 2f64.powf(alpha), 0.0),
        CopulaModel::Plackett { .. } => (0.0, 0.0),
        _ => return None,
    };
    Some(TailReport {
        lambda_upper: Some(upper),
        lambda_lower: Some(lower),
        method: TailMethod::ClosedForm,
        probe_points: vec![],
        monotone: true,
    })
}

/// Lower-tail candidates for a frailty-mixed one-sided asymmetric Gumbel.
///
/// On the diagonal the model reduces to `(1 + r phi(u))^(-1/beta)`, so the
/// ratio `C(u,u)/u` equals `(r + (1 - r) u^beta)^(-1/beta)` exactly and tends to
/// `r^(-1/beta)` under the `(1+t)^(-1/beta)` generator. With the generator
/// written as `(1+t)^(-beta)` the same limit reads `r^(-beta)`. Two expressions
/// for `r` are in circulation; both are returned with every exponent choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrailtyGumbelLowerTail {
    /// `1 - theta + (theta^(1/alpha) + 1)^alpha`, consistent with `C(u,u) = u^(2^alpha)`.
    pub r: f64,
    /// `1 - theta + (theta^alpha + 1)^(1/alpha)`, the alternative expression.
    pub r_alt: f64,
    /// `r^(-1/beta)`: the limit for the model as constructed here.
    pub lambda_gamma_inverse_beta: f64,
    /// `r^(-beta)`: the limit if the generator exponent is `-beta` instead.
    pub lambda_gamma_beta: f64,
    pub lambda_alt_inverse_beta: f64,
    pub lambda_alt_beta: f64,
    /// Diagonal probe of the model itself at `u = 1e-2, 1e-4, 1e-6`.
    pub probe: TailReport,
}

pub fn lambda_lower_frailty_gumbel(alpha: f64, theta: f64, beta: f64) -> Result<FrailtyGumbelLowerTail> {
    CopulaModel::gumbel(alpha)?;
    check_range("theta", theta, 0.0, 1.0, "[0, 1]")?;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(CopulaError::Domain {
            name: "beta",
            value: beta,
            domain: "(0, inf)",
        });
    }
    let r = 1.0 - theta + (theta.powf(1.0 / alpha) + 1.0).powf(alpha);
    let r_alt = 1.0 - theta + (theta.powf(alpha) + 1.0).powf(1.0 / alpha);
    let model = frailty_mix(asymmetrize_one_sided(CopulaModel::gumbel(alpha)?, theta)?, beta)?;
    let probe = numerical_tail_probe(&model, TailSide::Lower, &[1e-2, 1e-4, 1e-6])?;
    Ok(FrailtyGumbelLowerTail {
        r,
        r_alt,
        lambda_gamma_inverse_beta: r.powf(-1.0 / beta),
        lambda_gamma_beta: r.powf(-beta),
        lambda_alt_inverse_beta: r_alt.powf(-1.0 / beta),
        lambda_alt_beta: r_alt.powf(-beta),
        probe,
    })
}

/// Exact diagonal ratio `C(u,u)/u = (r + (1-r) u^beta)^(-1/beta)` of the
/// frailty-mixed one-sided Gumbel, for comparing probes at finite `u`.
pub fn frailty_gumbel_diagonal_ratio(u: f64, r: f64, beta: f64) -> f64 {
    let ub = u.powf(beta);
    (r + (1.0 - r) * ub).powf(-1.0 / beta)
}

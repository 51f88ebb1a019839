//! Base bivariate copulas and the recursive [`CopulaModel`] evaluator.
//!
//! Every model is evaluated in log-argument space: for `a = -ln u`, `b = -ln v`
//! it returns `l = -ln C(u, v)` together with `dl/da`, `dl/db` and `d2l/da db`.
//! Khoudraji products and Gamma-frailty compositions are linear or scalar maps in
//! that space, so their cdf, conditional cdf and density follow exactly from the
//! chain rule, and arguments of the form `exp(-phi(u))` never have to be
//! materialised (they underflow long before the copula value does).

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{check_range, CopulaError, Result};

/// Inputs are clamped to `[EDGE, 1 - EDGE]` before log/power transforms.
pub const EDGE: f64 = 1e-12;
/// Parameters this close to an independence limit are evaluated as independence.
pub const LIMIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Independence,
    Plackett,
    Clayton,
    ClaytonSurvival,
    Gumbel,
    Asymmetrized,
    Survival,
    FrailtyMixed,
}

/// A parameterized bivariate copula, either one of the closed-form bases or a
/// transform of another model.
///
/// Build these through the validating constructors ([`CopulaModel::clayton`],
/// [`crate::construct::asymmetrize`], ...). Parameter conventions:
///
/// * `Plackett { alpha }`: `alpha = psi - 1 >= -1`, `alpha = 0` is independence.
/// * `Clayton { alpha }`: `(u^-a + v^-a - 1)^(-1/a)`, `alpha >= 0`.
/// * `ClaytonSurvival { alpha }`: the copula whose survival function is Clayton's.
/// * `Gumbel { alpha }`: `exp(-[(-ln u)^(1/a) + (-ln v)^(1/a)]^a)`, `0 < alpha <= 1`.
/// * `Asymmetrized`: `u^(1-theta) v^(1-delta) C(u^theta, v^delta)`.
/// * `Survival`: `u + v - 1 + K(1-u, 1-v)`, the 180 degree rotation of `inner`.
/// * `FrailtyMixed`: `phi^-1(-ln K(e^-phi(u), e^-phi(v)))` with the Gamma
///   generator `phi^-1(t) = (1+t)^(-1/beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CopulaModel {
    Independence,
    Plackett {
        alpha: f64,
    },
    Clayton {
        alpha: f64,
    },
    ClaytonSurvival {
        alpha: f64,
    },
    Gumbel {
        alpha: f64,
    },
    Asymmetrized {
        base: Box<CopulaModel>,
        theta: f64,
        delta: f64,
    },
    Survival {
        inner: Box<CopulaModel>,
    },
    FrailtyMixed {
        inner: Box<CopulaModel>,
        beta: f64,
    },
}

/// `-ln C` and its derivatives with respect to `a = -ln u`, `b = -ln v`.
///
/// Instead of the mixed derivative `l_ab` the struct carries the density
/// kernel `la * lb - l_ab = c u v / C`, which every construction can produce
/// without subtracting nearly equal terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPartials {
    pub l: f64,
    pub la: f64,
    pub lb: f64,
    pub kernel: f64,
}

impl LogPartials {
    const INDEPENDENT: fn(f64, f64) -> LogPartials = |a, b| LogPartials {
        l: a + b,
        la: 1.0,
        lb: 1.0,
        kernel: 1.0,
    };

    fn is_finite(&self) -> bool {
        self.l.is_finite() && self.la.is_finite() && self.lb.is_finite() && self.kernel.is_finite()
    }
}

/// `C`, `dC/du`, `dC/dv` and the density `d2C/du dv` at an interior point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub cdf: f64,
    pub du: f64,
    pub dv: f64,
    pub duv: f64,
}

impl CopulaModel {
    pub fn independence() -> Self {
        CopulaModel::Independence
    }

    pub fn plackett(alpha: f64) -> Result<Self> {
        check_range("alpha", alpha, -1.0, f64::INFINITY, "[-1, inf)")?;
        Ok(CopulaModel::Plackett { alpha })
    }

    pub fn clayton(alpha: f64) -> Result<Self> {
        check_range("alpha", alpha, 0.0, f64::INFINITY, "[0, inf)")?;
        Ok(CopulaModel::Clayton { alpha })
    }

    pub fn clayton_survival(alpha: f64) -> Result<Self> {
        check_range("alpha", alpha, 0.0, f64::INFINITY, "[0, inf)")?;
        Ok(CopulaModel::ClaytonSurvival { alpha })
    }

    pub fn gumbel(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(CopulaError::Domain {
                name: "alpha",
                value: alpha,
                domain: "(0, 1]",
            });
        }
        Ok(CopulaModel::Gumbel { alpha })
    }

    pub fn family(&self) -> Family {
        match self {
            CopulaModel::Independence => Family::Independence,
            CopulaModel::Plackett { .. } => Family::Plackett,
            CopulaModel::Clayton { .. } => Family::Clayton,
            CopulaModel::ClaytonSurvival { .. } => Family::ClaytonSurvival,
            CopulaModel::Gumbel { .. } => Family::Gumbel,
            CopulaModel::Asymmetrized { .. } => Family::Asymmetrized,
            CopulaModel::Survival { .. } => Family::Survival,
            CopulaModel::FrailtyMixed { .. } => Family::FrailtyMixed,
        }
    }

    /// This model's own parameters, outermost transform first.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match self {
            CopulaModel::Independence | CopulaModel::Survival { .. } => vec![],
            CopulaModel::Plackett { alpha }
            | CopulaModel::Clayton { alpha }
            | CopulaModel::ClaytonSurvival { alpha }
            | CopulaModel::Gumbel { alpha } => vec![("alpha", *alpha)],
            CopulaModel::Asymmetrized { theta, delta, .. } => {
                vec![("theta", *theta), ("delta", *delta)]
            }
            CopulaModel::FrailtyMixed { beta, .. } => vec![("beta", *beta)],
        }
    }

    pub fn inner(&self) -> Option<&CopulaModel> {
        match self {
            CopulaModel::Asymmetrized { base, .. } => Some(base),
            CopulaModel::Survival { inner } | CopulaModel::FrailtyMixed { inner, .. } => Some(inner),
            _ => None,
        }
    }

    /// Checks every parameter in the tree against its domain.
    pub fn validate(&self) -> Result<()> {
        match self {
            CopulaModel::Independence => Ok(()),
            CopulaModel::Plackett { alpha } => CopulaModel::plackett(*alpha).map(drop),
            CopulaModel::Clayton { alpha } => CopulaModel::clayton(*alpha).map(drop),
            CopulaModel::ClaytonSurvival { alpha } => CopulaModel::clayton_survival(*alpha).map(drop),
            CopulaModel::Gumbel { alpha } => CopulaModel::gumbel(*alpha).map(drop),
            CopulaModel::Asymmetrized { base, theta, delta } => {
                check_range("theta", *theta, 0.0, 1.0, "[0, 1]")?;
                check_range("delta", *delta, 0.0, 1.0, "[0, 1]")?;
                base.validate()
            }
            CopulaModel::Survival { inner } => inner.validate(),
            CopulaModel::FrailtyMixed { inner, beta } => {
                check_range("beta", *beta, 0.0, f64::INFINITY, "[0, inf)")?;
                inner.validate()
            }
        }
    }

    /// True when `C(u^t, v^t) = C(u, v)^t` for all `t > 0`.
    pub fn is_extreme_value(&self) -> bool {
        match self {
            CopulaModel::Independence | CopulaModel::Gumbel { .. } => true,
            CopulaModel::Asymmetrized { base, .. } => base.is_extreme_value(),
            _ => false,
        }
    }

    /// Joint cdf. Total on the closed unit square (inputs outside are clamped).
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let v = v.clamp(0.0, 1.0);
        if u == 0.0 || v == 0.0 {
            return 0.0;
        }
        if u == 1.0 {
            return v;
        }
        if v == 1.0 {
            return u;
        }
        if let CopulaModel::Plackett { alpha } = self {
            if *alpha <= -1.0 + LIMIT_TOL {
                return (u + v - 1.0).max(0.0);
            }
        }
        let uc = u.clamp(EDGE, 1.0 - EDGE);
        let vc = v.clamp(EDGE, 1.0 - EDGE);
        let lp = self.log_partials(-uc.ln(), -vc.ln());
        let c = (-lp.l).exp();
        if c.is_finite() {
            frechet_clip(c, u, v)
        } else {
            f64::NAN
        }
    }

    /// Value, first partials and density at an interior point.
    pub fn partials(&self, u: f64, v: f64) -> Result<Partials> {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return Err(CopulaError::Boundary { u, v });
        }
        let uc = u.clamp(EDGE, 1.0 - EDGE);
        let vc = v.clamp(EDGE, 1.0 - EDGE);
        let lp = self.log_partials(-uc.ln(), -vc.ln());
        if !lp.is_finite() {
            return Err(self.numeric("partials", u, v));
        }
        Ok(from_log(&lp, uc, vc))
    }

    pub fn density(&self, u: f64, v: f64) -> Result<f64> {
        let d = self.log_density(u, v)?.exp();
        Ok(d)
    }

    /// `ln c(u, v)`, computed without leaving log space.
    pub fn log_density(&self, u: f64, v: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0) {
            return Err(CopulaError::Boundary { u, v });
        }
        let a = -u.clamp(EDGE, 1.0 - EDGE).ln();
        let b = -v.clamp(EDGE, 1.0 - EDGE).ln();
        let lp = self.log_partials(a, b);
        let out = -lp.l + lp.kernel.ln() + a + b;
        if out.is_finite() {
            Ok(out)
        } else {
            Err(self.numeric("log density", u, v))
        }
    }

    /// `dC(u, v)/du`, the cdf of `V` given `U = u`.
    pub fn conditional_cdf(&self, u: f64, v: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(CopulaError::Boundary { u, v });
        }
        if v <= 0.0 {
            return Ok(0.0);
        }
        if v >= 1.0 {
            return Ok(1.0);
        }
        let p = self.partials(u, v)?;
        if p.du.is_finite() {
            Ok(p.du.clamp(0.0, 1.0))
        } else {
            Err(self.numeric("conditional cdf", u, v))
        }
    }

    fn numeric(&self, what: &'static str, u: f64, v: f64) -> CopulaError {
        CopulaError::Numeric {
            what,
            u,
            v,
            model: self.to_string(),
        }
    }

    /// Log-space evaluation; `a`, `b` are `-ln u`, `-ln v` and may be huge.
    pub fn log_partials(&self, a: f64, b: f64) -> LogPartials {
        match self {
            CopulaModel::Independence => (LogPartials::INDEPENDENT)(a, b),
            CopulaModel::Plackett { alpha } => plackett_log(*alpha, a, b),
            CopulaModel::Clayton { alpha } => clayton_log(*alpha, a, b),
            CopulaModel::ClaytonSurvival { alpha } => survival_clayton_log(*alpha, 1.0, 1.0, a, b),
            CopulaModel::Gumbel { alpha } => gumbel_log(*alpha, a, b),
            CopulaModel::Asymmetrized { base, theta, delta } => {
                let (t, d) = (*theta, *delta);
                if t == 0.0 || d == 0.0 {
                    return (LogPartials::INDEPENDENT)(a, b);
                }
                asym_log(base.log_partials(t * a, d * b), t, d, a, b)
            }
            CopulaModel::Survival { inner } => match inner.as_ref() {
                CopulaModel::Clayton { alpha } => survival_clayton_log(*alpha, 1.0, 1.0, a, b),
                CopulaModel::Asymmetrized { base, theta, delta }
                    if matches!(base.as_ref(), CopulaModel::Clayton { .. }) =>
                {
                    let CopulaModel::Clayton { alpha } = base.as_ref() else {
                        unreachable!()
                    };
                    survival_clayton_log(*alpha, *theta, *delta, a, b)
                }
                other => survival_generic_log(other, a, b),
            },
            CopulaModel::FrailtyMixed { inner, beta } => {
                let beta = *beta;
                if beta < LIMIT_TOL {
                    return inner.log_partials(a, b);
                }
                let pa = (beta * a).exp_m1();
                let pb = (beta * b).exp_m1();
                let dpa = beta * (1.0 + pa);
                let dpb = beta * (1.0 + pb);
                let k = inner.log_partials(pa, pb);
                let g = 1.0 / (beta * (1.0 + k.l));
                LogPartials {
                    l: k.l.ln_1p() / beta,
                    la: g * k.la * dpa,
                    lb: g * k.lb * dpb,
                    kernel: g * dpa * dpb * (k.kernel + k.la * k.lb * (1.0 / beta - k.l) / (1.0 + k.l)),
                }
            }
        }
    }
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CopulaModel::Independence => write!(f, "Independence"),
            CopulaModel::Plackett { alpha } => write!(f, "Plackett(alpha={alpha})"),
            CopulaModel::Clayton { alpha } => write!(f, "Clayton(alpha={alpha})"),
            CopulaModel::ClaytonSurvival { alpha } => {
                write!(f, "ClaytonSurvival(alpha={alpha})")
            }
            CopulaModel::Gumbel { alpha } => write!(f, "Gumbel(alpha={alpha})"),
            CopulaModel::Asymmetrized { base, theta, delta } => {
                write!(f, "Asym[theta={theta}, delta={delta}]({base})")
            }
            CopulaModel::Survival { inner } => write!(f, "Survival({inner})"),
            CopulaModel::FrailtyMixed { inner, beta } => {
                write!(f, "Frailty[beta={beta}]({inner})")
            }
        }
    }
}

/// Clips a cdf value into the Frechet-Hoeffding bounds.
pub(crate) fn frechet_clip(c: f64, u: f64, v: f64) -> f64 {
    let hi = u.min(v);
    c.min(hi).max((u + v - 1.0).max(0.0).min(hi))
}

pub(crate) fn from_log(lp: &LogPartials, u: f64, v: f64) -> Partials {
    let c = (-lp.l).exp();
    Partials {
        cdf: c,
        du: c * lp.la / u,
        dv: c * lp.lb / v,
        duv: c * lp.kernel / (u * v),
    }
}

/// `ln(e^x + e^y - 1)` for `x, y >= 0`.
fn log_sum_exp_minus_one(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    if m < 1.0 {
        (x.exp_m1() + y.exp_m1()).ln_1p()
    } else {
        m + ((x - m).exp() + (y - m).exp() - (-m).exp()).ln()
    }
}

fn clayton_log(alpha: f64, a: f64, b: f64) -> LogPartials {
    if alpha < LIMIT_TOL {
        return (LogPartials::INDEPENDENT)(a, b);
    }
    let x = alpha * a;
    let y = alpha * b;
    let ln_d = log_sum_exp_minus_one(x, y);
    let la = (x - ln_d).exp();
    let lb = (y - ln_d).exp();
    LogPartials {
        l: ln_d / alpha,
        la,
        lb,
        kernel: (1.0 + alpha) * la * lb,
    }
}

fn gumbel_log(alpha: f64, a: f64, b: f64) -> LogPartials {
    if alpha > 1.0 - LIMIT_TOL {
        return (LogPartials::INDEPENDENT)(a, b);
    }
    let m = a.max(b);
    if m <= 0.0 {
        return (LogPartials::INDEPENDENT)(a, b);
    }
    let ia = 1.0 / alpha;
    let ra = a / m;
    let rb = b / m;
    let t = ra.powf(ia) + rb.powf(ia);
    let ga = ra.powf(ia - 1.0);
    let gb = rb.powf(ia - 1.0);
    let t_am1 = t.powf(alpha - 1.0);
    LogPartials {
        l: m * t.powf(alpha),
        la: t_am1 * ga,
        lb: t_am1 * gb,
        kernel: t_am1 * ga * gb * (t_am1 + (1.0 - alpha) / (alpha * t * m)),
    }
}

fn plackett_log(alpha: f64, a: f64, b: f64) -> LogPartials {
    if alpha.abs() < LIMIT_TOL {
        return (LogPartials::INDEPENDENT)(a, b);
    }
    let u = (-a).exp();
    let v = (-b).exp();
    let ub = -(-a).exp_m1();
    let vb = -(-b).exp_m1();
    let s = u * vb + v * ub;
    let diff = u - v;
    let disc = (1.0 + 2.0 * alpha * s + alpha * alpha * diff * diff).max(0.0);
    let sd = disc.sqrt();
    let m = 1.0 + alpha * (u + v);
    // q = C / (u v)
    let q = if m >= 0.0 {
        2.0 * (1.0 + alpha) / (m + sd)
    } else {
        (m - sd) / (2.0 * alpha) / (u * v)
    };
    // r_u = (dC/du) / v, r_v = (dC/dv) / u
    let r = |w_bar: f64, w: f64, n: f64| -> f64 {
        if n >= 0.0 {
            2.0 * (1.0 + alpha) * w_bar / (sd * (sd + n))
        } else {
            0.5 * (1.0 - n / sd) / w
        }
    };
    let r_u = r(vb, v, 1.0 - 2.0 * v + alpha * (u - v));
    let r_v = r(ub, u, 1.0 - 2.0 * u + alpha * (v - u));
    let dens = (1.0 + alpha) * (1.0 + alpha * s) / (disc * sd);
    let la = r_u / q;
    let lb = r_v / q;
    LogPartials {
        l: a + b - q.ln(),
        la,
        lb,
        kernel: dens / q,
    }
}

/// Log-partials of `u^(1-t) v^(1-d) C(u^t, v^d)` from those of `C` at `(t a, d b)`.
fn asym_log(inner: LogPartials, t: f64, d: f64, a: f64, b: f64) -> LogPartials {
    LogPartials {
        l: (1.0 - t) * a + (1.0 - d) * b + inner.l,
        la: (1.0 - t) + t * inner.la,
        lb: (1.0 - d) + d * inner.lb,
        kernel: (1.0 - t) * (1.0 - d) + (1.0 - t) * d * inner.lb + t * (1.0 - d) * inner.la + t * d * inner.kernel,
    }
}

/// `p / u` where `p = 1 - (1-u)^k`, with the `u -> 0` limit `k`.
fn one_minus_pow_ratio(u: f64, ln_ubar: f64, k: f64) -> (f64, f64) {
    let p = -(k * ln_ubar).exp_m1();
    let ratio = if u > 1e-200 { p / u } else { k };
    (p, ratio)
}

/// Survival copula of `u^(1-t) v^(1-d) Clayton(u^t, v^d)`, written as
/// `uv + (1-u)(1-v) E(w)` so that no term cancels anywhere on the square.
fn survival_clayton_log(alpha: f64, theta: f64, delta: f64, a: f64, b: f64) -> LogPartials {
    if alpha < LIMIT_TOL || theta == 0.0 || delta == 0.0 {
        return (LogPartials::INDEPENDENT)(a, b);
    }
    let u = (-a).exp();
    let v = (-b).exp();
    let ub = -(-a).exp_m1();
    let vb = -(-b).exp_m1();
    let ln_ub = if u < 0.5 { (-u).ln_1p() } else { ub.ln() };
    let ln_vb = if v < 0.5 { (-v).ln_1p() } else { vb.ln() };
    // the density equals that of the asymmetrized Clayton at (1-u, 1-v), a sum of positive terms
    let (ab, bb) = (-ln_ub, -ln_vb);
    let k = asym_log(clayton_log(alpha, theta * ab, delta * bb), theta, delta, ab, bb);
    let density = (-k.l + ab + bb).exp() * k.kernel;
    if u > 0.5 && v > 0.5 {
        // u + v - 1 + K(1-u, 1-v) adds non-negative terms here, while (1-u)^(alpha theta)
        // and (1-v)^(alpha delta) can both underflow in the form below
        let kc = (-k.l).exp();
        let c = (u + v - 1.0) + kc;
        let cu = 1.0 - kc * k.la / ub;
        let cv = 1.0 - kc * k.lb / vb;
        return LogPartials {
            l: -c.ln(),
            la: u * cu.max(0.0) / c,
            lb: v * cv.max(0.0) / c,
            kernel: u * v * density / c,
        };
    }
    let ka = alpha * theta;
    let kb = alpha * delta;
    let (p, pu) = one_minus_pow_ratio(u, ln_ub, ka);
    let (q, qv) = one_minus_pow_ratio(v, ln_vb, kb);
    let dp = ka * ((ka - 1.0) * ln_ub).exp();
    let dq = kb * ((kb - 1.0) * ln_vb).exp();
    let w = p * q;
    let ia = 1.0 / alpha;
    let ln_1mw = if w < 0.5 {
        (-w).ln_1p()
    } else {
        // 1 - pq = s + t (1 - s) with s = 1 - p, t = 1 - q, exact near w = 1
        let s = (ka * ln_ub).exp();
        let t = (kb * ln_vb).exp();
        (s + t * (1.0 - s)).ln()
    };
    let e = (-ia * ln_1mw).exp_m1();
    let e_w = if w > 1e-200 { e / w } else { ia };
    let e1 = ia * (-(ia + 1.0) * ln_1mw).exp();

    let r = 1.0 + ub * vb * e_w * pu * qv;
    let la = (1.0 - vb * e_w * p * qv + ub * vb * e1 * dp * qv) / r;
    let lb = (1.0 - ub * e_w * pu * q + ub * vb * e1 * dq * pu) / r;
    LogPartials {
        l: a + b - r.ln(),
        la,
        lb,
        kernel: density / r,
    }
}

fn survival_generic_log(inner: &CopulaModel, a: f64, b: f64) -> LogPartials {
    let u = (-a).exp();
    let v = (-b).exp();
    let ub = (-(-a).exp_m1()).max(f64::MIN_POSITIVE);
    let vb = (-(-b).exp_m1()).max(f64::MIN_POSITIVE);
    let k = from_log(&inner.log_partials(-ub.ln(), -vb.ln()), ub, vb);
    let c = u + v - 1.0 + k.cdf;
    let cu = 1.0 - k.du;
    let cv = 1.0 - k.dv;
    let la = u * cu / c;
    let lb = v * cv / c;
    LogPartials {
        l: -c.ln(),
        la,
        lb,
        kernel: u * v * k.duv / c,
    }
}

/// Clayton copula `(u^-a + v^-a - 1)^(-1/a)`, evaluated directly.
pub fn clayton_cdf(u: f64, v: f64, alpha: f64) -> Result<f64> {
    check_range("alpha", alpha, 0.0, f64::INFINITY, "[0, inf)")?;
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    if u == 0.0 || v == 0.0 {
        return Ok(0.0);
    }
    if alpha < LIMIT_TOL {
        return Ok(u * v);
    }
    let s = u.powf(-alpha) + v.powf(-alpha) - 1.0;
    Ok(frechet_clip(s.powf(-1.0 / alpha), u, v))
}

/// Gumbel copula with dependence exponent `alpha` in `(0, 1]`.
pub fn gumbel_cdf(u: f64, v: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CopulaError::Domain {
            name: "alpha",
            value: alpha,
            domain: "(0, 1]",
        });
    }
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    if u == 0.0 || v == 0.0 {
        return Ok(0.0);
    }
    let s = (-u.ln()).powf(1.0 / alpha) + (-v.ln()).powf(1.0 / alpha);
    Ok((-s.powf(alpha)).exp())
}

/// Plackett copula with `alpha = psi - 1`. Returns the value and a flag set when
/// the discriminant had to be clamped at zero.
pub fn plackett_cdf_flagged(u: f64, v: f64, alpha: f64) -> Result<(f64, bool)> {
    check_range("alpha", alpha, -1.0, f64::INFINITY, "[-1, inf)")?;
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    if alpha.abs() < LIMIT_TOL {
        return Ok((u * v, false));
    }
    let m = 1.0 + alpha * (u + v);
    let disc = m * m - 4.0 * alpha * (alpha + 1.0) * u * v;
    let clamped = disc < 0.0;
    let c = (m - disc.max(0.0).sqrt()) / (2.0 * alpha);
    Ok((frechet_clip(c, u, v), clamped))
}

pub fn plackett_cdf(u: f64, v: f64, alpha: f64) -> Result<f64> {
    plackett_cdf_flagged(u, v, alpha).map(|(c, _)| c)
}

/// `u + v - 1 + Clayton(1-u, 1-v)`, evaluated directly.
pub fn clayton_survival_cdf(u: f64, v: f64, alpha: f64) -> Result<f64> {
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    let s = clayton_cdf(1.0 - u, 1.0 - v, alpha)?;
    Ok(frechet_clip(u + v - 1.0 + s, u, v))
}

/// Laplace-transform generator pair of a frailty law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GeneratorSpec {
    /// `phi^-1(t) = (1+t)^(-1/param)`, `param > 0`.
    GammaLT(f64),
    /// `phi^-1(t) = exp(-t^param)`, `0 < param <= 1`.
    PositiveStableLT(f64),
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GeneratorSpec::GammaLT(p) => {
                if p > 0.0 && p.is_finite() {
                    Ok(())
                } else {
                    Err(CopulaError::Domain {
                        name: "alpha",
                        value: p,
                        domain: "(0, inf)",
                    })
                }
            }
            GeneratorSpec::PositiveStableLT(p) => {
                if p > 0.0 && p <= 1.0 {
                    Ok(())
                } else {
                    Err(CopulaError::Domain {
                        name: "alpha",
                        value: p,
                        domain: "(0, 1]",
                    })
                }
            }
        }
    }

    pub fn param(&self) -> f64 {
        match *self {
            GeneratorSpec::GammaLT(p) | GeneratorSpec::PositiveStableLT(p) => p,
        }
    }

    /// The Laplace transform `phi^-1` on `[0, inf)`.
    pub fn inverse(&self, t: f64) -> f64 {
        match *self {
            GeneratorSpec::GammaLT(p) => (-t.ln_1p() / p).exp(),
            GeneratorSpec::PositiveStableLT(p) => (-t.powf(p)).exp(),
        }
    }

    /// The generator `phi` on `(0, 1]`.
    pub fn generator(&self, s: f64) -> f64 {
        match *self {
            GeneratorSpec::GammaLT(p) => (-p * s.ln()).exp_m1(),
            GeneratorSpec::PositiveStableLT(p) => (-s.ln()).powf(1.0 / p),
        }
    }

    /// The Archimedean copula `phi^-1(phi(u) + phi(v))` generated by this law.
    pub fn archimedean(&self) -> CopulaModel {
        match *self {
            GeneratorSpec::GammaLT(p) => CopulaModel::Clayton { alpha: p },
            GeneratorSpec::PositiveStableLT(p) => CopulaModel::Gumbel { alpha: p },
        }
    }
}

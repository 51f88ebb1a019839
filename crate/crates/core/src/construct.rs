//! Asymmetrization and frailty-mixture transforms of base copulas.

use serde::{Deserialize, Serialize};

use crate::copula::{CopulaModel, GeneratorSpec};
use crate::error::{check_range, Result};
use crate::tails::pickands_a_logistic;

/// Exponents of the Khoudraji product `u^(1-theta) v^(1-delta) C(u^theta, v^delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryParams {
    pub theta: f64,
    pub delta: f64,
}

impl AsymmetryParams {
    pub fn new(theta: f64, delta: f64) -> Result<Self> {
        check_range("theta", theta, 0.0, 1.0, "[0, 1]")?;
        check_range("delta", delta, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { theta, delta })
    }
}

/// `u^(1-theta) v^(1-delta) C(u^theta, v^delta)`.
///
/// `theta = delta = 1` returns `base` itself, so nested fits compare exactly.
pub fn asymmetrize(base: CopulaModel, p: AsymmetryParams) -> Result<CopulaModel> {
    let p = AsymmetryParams::new(p.theta, p.delta)?;
    base.validate()?;
    if p.theta == 1.0 && p.delta == 1.0 {
        return Ok(base);
    }
    Ok(CopulaModel::Asymmetrized {
        base: Box::new(base),
        theta: p.theta,
        delta: p.delta,
    })
}

/// `v^(1-delta) C(u, v^delta)`: only the second coordinate is deformed.
pub fn asymmetrize_one_sided(base: CopulaModel, delta: f64) -> Result<CopulaModel> {
    asymmetrize(base, AsymmetryParams::new(1.0, delta)?)
}

/// Mirror of [`asymmetrize_one_sided`]: `u^(1-theta) C(u^theta, v)`.
pub fn asymmetrize_one_sided_u(base: CopulaModel, theta: f64) -> Result<CopulaModel> {
    asymmetrize(base, AsymmetryParams::new(theta, 1.0)?)
}

/// Clayton asymmetrized on its survival function, giving an upper tail that is
/// both asymmetric and dependent: `u + v - 1 + S~(1-u, 1-v)` where
/// `S~(s, t) = s^(1-theta) t^(1-delta) Clayton(s^theta, t^delta)`.
pub fn asymmetrize_survival_clayton(alpha: f64, theta: f64, delta: f64) -> Result<CopulaModel> {
    let clayton = CopulaModel::clayton(alpha)?;
    let p = AsymmetryParams::new(theta, delta)?;
    if p.theta == 1.0 && p.delta == 1.0 {
        return Ok(CopulaModel::ClaytonSurvival { alpha });
    }
    Ok(CopulaModel::Survival {
        inner: Box::new(CopulaModel::Asymmetrized {
            base: Box::new(clayton),
            theta: p.theta,
            delta: p.delta,
        }),
    })
}

/// The 180 degree rotation `u + v - 1 + K(1-u, 1-v)` of any model.
pub fn survival(inner: CopulaModel) -> Result<CopulaModel> {
    inner.validate()?;
    Ok(match inner {
        CopulaModel::Independence => CopulaModel::Independence,
        CopulaModel::Clayton { alpha } => CopulaModel::ClaytonSurvival { alpha },
        CopulaModel::ClaytonSurvival { alpha } => CopulaModel::Clayton { alpha },
        CopulaModel::Survival { inner } => *inner,
        other => CopulaModel::Survival { inner: Box::new(other) },
    })
}

/// Gamma-frailty mixture `(1 - ln K(e^-phi(u), e^-phi(v)))^(-1/beta)` with
/// `phi(s) = s^(-beta) - 1`. Adds lower tail dependence to `inner`; `beta = 0`
/// returns `inner` itself.
pub fn frailty_mix(inner: CopulaModel, beta: f64) -> Result<CopulaModel> {
    check_range("beta", beta, 0.0, f64::INFINITY, "[0, inf)")?;
    inner.validate()?;
    if beta == 0.0 {
        return Ok(inner);
    }
    Ok(CopulaModel::FrailtyMixed {
        inner: Box::new(inner),
        beta,
    })
}

/// Frailty-mixed asymmetrized Gumbel evaluated through its Pickands function,
/// `phi^-1((x + y) A(x / (x + y)))` with `x = phi(u)`, `y = phi(v)`.
///
/// This path shares no code with [`CopulaModel::cdf`] and serves as a cross-check
/// of the recursive evaluator.
pub fn extreme_value_frailty_cdf(u: f64, v: f64, alpha: f64, theta: f64, delta: f64, beta: f64) -> Result<f64> {
    CopulaModel::gumbel(alpha)?;
    AsymmetryParams::new(theta, delta)?;
    check_range("beta", beta, 0.0, f64::INFINITY, "(0, inf)")?;
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    if u == 0.0 || v == 0.0 {
        return Ok(0.0);
    }
    let g = GeneratorSpec::GammaLT(beta);
    let (x, y) = if beta > 0.0 {
        (g.generator(u), g.generator(v))
    } else {
        (-u.ln(), -v.ln())
    };
    let s = x + y;
    if s == 0.0 {
        return Ok(1.0);
    }
    let l = s * pickands_a_logistic(x / s, alpha, theta, delta)?;
    Ok(if beta > 0.0 { g.inverse(l) } else { (-l).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{clayton_cdf, clayton_survival_cdf, gumbel_cdf};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> Vec<f64> {
        (1..n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn identity_exponents_return_base() {
        let base = CopulaModel::plackett(3.0).unwrap();
        let m = asymmetrize(base.clone(), AsymmetryParams::new(1.0, 1.0).unwrap()).unwrap();
        assert_eq!(m, base);
        for &u in &grid(20) {
            for &v in &grid(20) {
                assert!((m.cdf(u, v) - base.cdf(u, v)).abs() < 1e-12);
            }
        }
        assert_eq!(frailty_mix(base.clone(), 0.0).unwrap(), base);
        assert_eq!(
            asymmetrize_survival_clayton(2.0, 1.0, 1.0).unwrap(),
            CopulaModel::ClaytonSurvival { alpha: 2.0 }
        );
    }

    #[test]
    fn zero_exponents_give_independence() {
        let m = asymmetrize(
            CopulaModel::clayton(4.0).unwrap(),
            AsymmetryParams::new(0.0, 0.0).unwrap(),
        )
        .unwrap();
        let one = asymmetrize_one_sided(CopulaModel::gumbel(0.3).unwrap(), 0.0).unwrap();
        for &u in &grid(10) {
            for &v in &grid(10) {
                assert!((m.cdf(u, v) - u * v).abs() < 1e-14);
                assert!((one.cdf(u, v) - u * v).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn asymmetric_gumbel_matches_direct_formula() {
        let m = asymmetrize_one_sided(CopulaModel::gumbel(0.5).unwrap(), 0.94).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let u: f64 = rng.random_range(0.01..0.99);
            let v: f64 = rng.random_range(0.01..0.99);
            // v^(1-delta) exp(-[(-ln u)^2 + (-delta ln v)^2]^(1/2))
            let s = ((-u.ln()).powi(2) + (-0.94 * v.ln()).powi(2)).sqrt();
            let direct = v.powf(0.06) * (-s).exp();
            assert!((m.cdf(u, v) - direct).abs() < 1e-13);
            let via_base = v.powf(0.06) * gumbel_cdf(u, v.powf(0.94), 0.5).unwrap();
            assert!((m.cdf(u, v) - via_base).abs() < 1e-13);
        }
    }

    #[test]
    fn survival_clayton_asymmetry_matches_definition() {
        let (alpha, theta, delta) = (2.34, 0.78, 0.96);
        let m = asymmetrize_survival_clayton(alpha, theta, delta).unwrap();
        for &u in &grid(25) {
            for &v in &grid(25) {
                let (s, t) = (1.0 - u, 1.0 - v);
                let st = s.powf(1.0 - theta)
                    * t.powf(1.0 - delta)
                    * clayton_cdf(s.powf(theta), t.powf(delta), alpha).unwrap();
                let direct = u + v - 1.0 + st;
                assert!((m.cdf(u, v) - direct).abs() < 1e-12, "{u} {v}");
            }
        }
    }

    #[test]
    fn survival_clayton_alpha_to_zero_is_independence() {
        let m = asymmetrize_survival_clayton(1e-12, 0.5, 0.7).unwrap();
        for &u in &grid(10) {
            for &v in &grid(10) {
                assert!((m.cdf(u, v) - u * v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn generic_survival_matches_specialised_path() {
        let inner = asymmetrize(
            CopulaModel::clayton(1.7).unwrap(),
            AsymmetryParams::new(0.6, 0.8).unwrap(),
        )
        .unwrap();
        let fast = survival(inner.clone()).unwrap();
        let generic = CopulaModel::Survival {
            inner: Box::new(CopulaModel::Asymmetrized {
                base: Box::new(CopulaModel::Asymmetrized {
                    base: Box::new(CopulaModel::clayton(1.7).unwrap()),
                    theta: 0.6,
                    delta: 0.8,
                }),
                theta: 1.0,
                delta: 1.0,
            }),
        };
        for &u in &grid(12) {
            for &v in &grid(12) {
                let a = fast.partials(u, v).unwrap();
                let b = generic.partials(u, v).unwrap();
                assert!((a.cdf - b.cdf).abs() < 1e-12);
                assert!((a.du - b.du).abs() < 1e-9);
                assert!((a.duv - b.duv).abs() < 1e-7 * a.duv.max(1.0));
            }
        }
        assert_eq!(
            survival(CopulaModel::clayton(2.0).unwrap()).unwrap(),
            CopulaModel::ClaytonSurvival { alpha: 2.0 }
        );
        let c = survival(CopulaModel::ClaytonSurvival { alpha: 2.0 }).unwrap();
        let expected = clayton_survival_cdf(0.7, 0.6, 2.0).unwrap() - 0.7 - 0.6 + 1.0;
        assert!((c.cdf(0.3, 0.4) - expected).abs() < 1e-12);
    }

    #[test]
    fn frailty_over_independence_is_clayton() {
        for beta in [0.3, 1.0, 2.5] {
            let m = frailty_mix(CopulaModel::Independence, beta).unwrap();
            for &u in &grid(20) {
                for &v in &grid(20) {
                    let c = clayton_cdf(u, v, beta).unwrap();
                    assert!((m.cdf(u, v) - c).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn frailty_small_beta_recovers_inner() {
        let inner = asymmetrize_one_sided(CopulaModel::gumbel(0.48).unwrap(), 0.76).unwrap();
        let m = frailty_mix(inner.clone(), 1e-9).unwrap();
        for &u in &grid(10) {
            for &v in &grid(10) {
                assert!((m.cdf(u, v) - inner.cdf(u, v)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn frailty_gumbel_matches_pickands_route() {
        for &(alpha, theta, delta, beta) in &[(0.48, 1.0, 0.76, 0.19), (0.3, 0.6, 0.9, 1.5), (0.8, 0.5, 0.5, 0.05)] {
            let m = frailty_mix(
                asymmetrize(
                    CopulaModel::gumbel(alpha).unwrap(),
                    AsymmetryParams::new(theta, delta).unwrap(),
                )
                .unwrap(),
                beta,
            )
            .unwrap();
            for &u in &grid(15) {
                for &v in &grid(15) {
                    let direct = extreme_value_frailty_cdf(u, v, alpha, theta, delta, beta).unwrap();
                    assert!(
                        (m.cdf(u, v) - direct).abs() < 1e-12,
                        "{u} {v}: {} vs {direct}",
                        m.cdf(u, v)
                    );
                }
            }
        }
    }

    #[test]
    fn frailty_gumbel_lower_ratio_exceeds_clayton() {
        let inner = asymmetrize_one_sided(CopulaModel::gumbel(0.48).unwrap(), 0.76).unwrap();
        let m = frailty_mix(inner, 0.19).unwrap();
        let clayton = CopulaModel::clayton(0.19).unwrap();
        for u in [1e-2, 1e-3, 1e-4] {
            assert!(m.cdf(u, u) / u > clayton.cdf(u, u) / u);
        }
    }

    #[test]
    fn asymmetrized_gumbel_is_max_stable() {
        let m = asymmetrize(
            CopulaModel::gumbel(0.4).unwrap(),
            AsymmetryParams::new(0.7, 0.9).unwrap(),
        )
        .unwrap();
        for n in [2.0, 5.0, 10.0] {
            for &u in &grid(9) {
                for &v in &grid(9) {
                    let lhs = m.cdf(u.powf(1.0 / n), v.powf(1.0 / n)).powf(n);
                    assert!((lhs - m.cdf(u, v)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(AsymmetryParams::new(1.2, 0.5).is_err());
        assert!(asymmetrize_one_sided(CopulaModel::Independence, -0.1).is_err());
        assert!(frailty_mix(CopulaModel::Independence, -1.0).is_err());
        assert!(asymmetrize_survival_clayton(-1.0, 0.5, 0.5).is_err());
    }
}

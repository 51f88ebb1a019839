//! Semi-parametric margins: empirical cdf below a threshold, generalized Pareto above.
//!
//! The GPD uses the shape sign where `k > 0` gives a bounded tail:
//! `F(x) = 1 - (1 - u0) [1 - k (x - x0) / sigma]_+^(1/k)`. In the more common
//! `xi` parametrization, `xi = -k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::copula::EDGE;
use crate::error::{CopulaError, Result};

pub const MIN_SAMPLE: usize = 100;
pub const MIN_EXCEEDANCES: usize = 30;
pub const DEFAULT_THRESHOLD_QUANTILE: f64 = 0.90;
/// Shape values closer to zero than this use the exponential limit.
const SHAPE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginOptions {
    pub threshold_quantile: f64,
    /// Half-width of the uniform noise added before fitting; 0 disables dithering.
    pub dither_halfwidth: f64,
    /// Seed of the dithering noise.
    pub seed: u64,
}

impl Default for MarginOptions {
    fn default() -> Self {
        Self {
            threshold_quantile: DEFAULT_THRESHOLD_QUANTILE,
            dither_halfwidth: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginModel {
    /// Threshold `x0` in data units.
    pub threshold: f64,
    /// `F(x0)`, the probability mass of the empirical body.
    pub u0: f64,
    pub gpd_scale: f64,
    pub gpd_shape: f64,
    pub n_exceedances: usize,
    pub dither_halfwidth: f64,
    /// Fitted (possibly dithered) sample in nondecreasing order.
    pub sorted_sample: Vec<f64>,
}

/// Method-of-moments GPD estimates `(sigma, k)` from exceedances `y = x - x0`.
pub fn gpd_moments(exceedances: &[f64]) -> Result<(f64, f64)> {
    let n = exceedances.len();
    if n < 2 {
        return Err(CopulaError::InsufficientData(format!("{n} exceedances")));
    }
    let m = exceedances.iter().sum::<f64>() / n as f64;
    let s2 = exceedances.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    if !(s2 > 0.0) || !s2.is_finite() {
        return Err(CopulaError::InsufficientData("exceedances have zero variance".into()));
    }
    let ratio = m * m / s2;
    Ok((0.5 * m * (ratio + 1.0), 0.5 * (ratio - 1.0)))
}

/// GPD cdf of an exceedance `y >= 0`.
pub fn gpd_cdf(y: f64, sigma: f64, k: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if k.abs() < SHAPE_TOL {
        return -(-y / sigma).exp_m1();
    }
    let base = 1.0 - k * y / sigma;
    if base <= 0.0 {
        return 1.0;
    }
    -((base.ln() / k).exp_m1())
}

/// GPD quantile of an exceedance at probability `q` in `[0, 1)`.
pub fn gpd_quantile(q: f64, sigma: f64, k: f64) -> f64 {
    let ln_r = (-q).ln_1p();
    if k.abs() < SHAPE_TOL {
        return -sigma * ln_r;
    }
    -(sigma / k) * (k * ln_r).exp_m1()
}

impl MarginModel {
    /// Fits the body/tail margin to `data`.
    pub fn fit(data: &[f64], opts: MarginOptions) -> Result<Self> {
        let n = data.len();
        if n < MIN_SAMPLE {
            return Err(CopulaError::InsufficientData(format!(
                "{n} observations, need at least {MIN_SAMPLE}"
            )));
        }
        let q = opts.threshold_quantile;
        if !(q > 0.5 && q < 1.0) {
            return Err(CopulaError::Domain {
                name: "threshold_quantile",
                value: q,
                domain: "(0.5, 1)",
            });
        }
        let w = opts.dither_halfwidth;
        if !(w >= 0.0) || !w.is_finite() {
            return Err(CopulaError::Domain {
                name: "dither_halfwidth",
                value: w,
                domain: "[0, inf)",
            });
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(CopulaError::Contract(format!("non-finite observation {bad}")));
        }
        let mut sorted: Vec<f64> = if w > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            data.iter().map(|x| x + rng.random_range(-w..=w)).collect()
        } else {
            data.to_vec()
        };
        sorted.sort_by(f64::total_cmp);

        let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
        let x0 = sorted[idx];
        let n_body = sorted.partition_point(|&x| x <= x0);
        let exceedances: Vec<f64> = sorted[n_body..].iter().map(|x| x - x0).collect();
        if exceedances.len() < MIN_EXCEEDANCES {
            return Err(CopulaError::InsufficientData(format!(
                "{} exceedances above {x0}, need at least {MIN_EXCEEDANCES}",
                exceedances.len()
            )));
        }
        let (sigma, k) = gpd_moments(&exceedances)?;
        Ok(Self {
            threshold: x0,
            u0: n_body as f64 / (n + 1) as f64,
            gpd_scale: sigma,
            gpd_shape: k,
            n_exceedances: exceedances.len(),
            dither_halfwidth: w,
            sorted_sample: sorted,
        })
    }

    pub fn n(&self) -> usize {
        self.sorted_sample.len()
    }

    /// Upper end of the support; finite when `k > 0`.
    pub fn upper_endpoint(&self) -> f64 {
        if self.gpd_shape > SHAPE_TOL {
            self.threshold + self.gpd_scale / self.gpd_shape
        } else {
            f64::INFINITY
        }
    }

    /// Unclipped cdf: `#{x_i <= x} / (n + 1)` up to the threshold, GPD above.
    pub fn raw_cdf(&self, x: f64) -> f64 {
        if x <= self.threshold {
            let count = self.sorted_sample.partition_point(|&s| s <= x);
            return count as f64 / (self.n() + 1) as f64;
        }
        self.u0 + (1.0 - self.u0) * gpd_cdf(x - self.threshold, self.gpd_scale, self.gpd_shape)
    }

    /// Cdf clipped to `[1e-12, 1 - 1e-12]` for copula evaluation.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        self.raw_cdf(x).clamp(EDGE, 1.0 - EDGE)
    }

    /// Inverse of [`MarginModel::cdf`]: an order statistic at or below `u0`,
    /// the GPD quantile above.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        if p <= self.u0 {
            let n_body = self.sorted_sample.partition_point(|&s| s <= self.threshold);
            // p = i/(n+1) must map back to the i-th order statistic despite rounding
            let rank = p * (self.n() + 1) as f64;
            let rank = if (rank - rank.round()).abs() < 1e-9 {
                rank.round()
            } else {
                rank.ceil()
            };
            let i = (rank as usize).clamp(1, n_body.max(1));
            return self.sorted_sample[i - 1];
        }
        let q = (p - self.u0) / (1.0 - self.u0);
        self.threshold + gpd_quantile(q, self.gpd_scale, self.gpd_shape)
    }
}

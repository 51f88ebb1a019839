//! Rank statistics, goodness-of-fit distances and quadrature helpers.

use crate::copula::CopulaModel;

/// Kendall's tau-b in `O(n log n)` (Knight's algorithm).
pub fn kendall_tau(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut p: Vec<(f64, f64)> = pairs.to_vec();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let pairs_in = |len: u64| len * len.saturating_sub(1) / 2;
    let mut tied_x = 0u64;
    let mut tied_xy = 0u64;
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for i in 1..n {
        if p[i].0 == p[i - 1].0 {
            run_x += 1;
            if p[i].1 == p[i - 1].1 {
                run_xy += 1;
            } else {
                tied_xy += pairs_in(run_xy);
                run_xy = 1;
            }
        } else {
            tied_x += pairs_in(run_x);
            tied_xy += pairs_in(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tied_x += pairs_in(run_x);
    tied_xy += pairs_in(run_xy);

    let mut ys: Vec<f64> = p.iter().map(|q| q.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut tied_y = 0u64;
    let mut run_y = 1u64;
    for i in 1..n {
        if ys[i] == ys[i - 1] {
            run_y += 1;
        } else {
            tied_y += pairs_in(run_y);
            run_y = 1;
        }
    }
    tied_y += pairs_in(run_y);

    let total = pairs_in(n as u64);
    let num = total as f64 - tied_x as f64 - tied_y as f64 + tied_xy as f64 - 2.0 * swaps as f64;
    let den = ((total - tied_x) as f64 * (total - tied_y) as f64).sqrt();
    num / den
}

/// Stable merge sort returning the number of inversions.
fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = merge_count(&mut a[..mid], &mut buf[..mid]) + merge_count(&mut a[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[j] < a[i] {
            buf[k] = a[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = a[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&a[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&a[j..n]);
    a.copy_from_slice(&buf[..n]);
    count
}

/// One-sample Kolmogorov distance of `xs` from the uniform law on `[0, 1]`.
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Sup-distance between the empirical copula of `pairs` and `cdf` over the
/// interior grid `{1/(m+1), ..., m/(m+1)}^2`.
pub fn grid_sup_distance(pairs: &[(f64, f64)], m: usize, cdf: impl Fn(f64, f64) -> f64) -> f64 {
    let step = 1.0 / (m + 1) as f64;
    let bin = |x: f64| -> usize { ((x / step).ceil() as usize).clamp(1, m + 1) - 1 };
    // counts[i][j] = #{U in cell i, V in cell j}, cell m meaning above the last grid line
    let mut counts = vec![vec![0u64; m + 1]; m + 1];
    for &(u, v) in pairs {
        counts[bin(u)][bin(v)] += 1;
    }
    let n = pairs.len() as f64;
    let mut cum = vec![vec![0u64; m + 1]; m + 1];
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let mut c = counts[i][j];
            if i > 0 {
                c += cum[i - 1][j];
            }
            if j > 0 {
                c += cum[i][j - 1];
            }
            if i > 0 && j > 0 {
                c -= cum[i - 1][j - 1];
            }
            cum[i][j] = c;
            let (u, v) = ((i + 1) as f64 * step, (j + 1) as f64 * step);
            worst = worst.max((c as f64 / n - cdf(u, v)).abs());
        }
    }
    worst
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 0 { 1.0 } else { p1 };
            dp = nf * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre nodes/weights on `(0, 1)`, refined geometrically
/// toward both endpoints where copula derivatives vary fastest.
pub fn unit_interval_rule(panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    // breakpoints: geometric near 0 and 1, uniform in the middle
    let mut edges = vec![0.0, 1.0];
    for k in 1..=6 {
        let h = 0.05 * 10f64.powi(-k);
        edges.push(h);
        edges.push(1.0 - h);
    }
    for k in 0..=panels {
        edges.push(0.05 + 0.9 * k as f64 / panels as f64);
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut rule = Vec::with_capacity((edges.len() - 1) * order);
    for e in edges.windows(2) {
        let (a, b) = (e[0], e[1]);
        let half = 0.5 * (b - a);
        for (xi, wi) in x.iter().zip(&w) {
            rule.push((a + half * (xi + 1.0), half * wi));
        }
    }
    rule
}

/// Kendall's tau of a copula by quadrature of `1 - 4 E[C_u C_v]`.
pub fn kendall_tau_quadrature(model: &CopulaModel) -> f64 {
    let rule = unit_interval_rule(16, 8);
    let mut acc = 0.0;
    for &(u, wu) in &rule {
        for &(v, wv) in &rule {
            if let Ok(p) = model.partials(u, v) {
                acc += wu * wv * p.du * p.dv;
            }
        }
    }
    1.0 - 4.0 * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_tau(p: &[(f64, f64)]) -> f64 {
        let mut s = 0.0;
        let n = p.len();
        for i in 0..n {
            for j in i + 1..n {
                s += ((p[i].0 - p[j].0) * (p[i].1 - p[j].1)).signum();
            }
        }
        s / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn knight_matches_naive_without_ties() {
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let x = (i as f64 * 0.618_033_988_75).fract();
                let y = x + (i as f64).sin();
                (x, y)
            })
            .collect();
        assert!((kendall_tau(&pts) - naive_tau(&pts)).abs() < 1e-12);
        let rev: Vec<(f64, f64)> = (0..50).map(|i| (i as f64, -(i as f64))).collect();
        assert!((kendall_tau(&rev) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn tau_b_with_ties() {
        // tau-b: 6 concordant, 2 discordant, one tie in each coordinate
        let p = [(1.0, 1.0), (2.0, 3.0), (2.0, 2.0), (3.0, 2.0), (4.0, 5.0)];
        assert!((kendall_tau(&p) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn ks_of_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!((ks_uniform(&xs) - 0.0005).abs() < 1e-12);
    }

    #[test]
    fn empirical_copula_distance() {
        let pts: Vec<(f64, f64)> = (0..100)
            .map(|i| ((i as f64 + 0.5) / 100.0, (i as f64 + 0.5) / 100.0))
            .collect();
        let d = grid_sup_distance(&pts, 9, |u, v| u.min(v));
        assert!(d < 0.011);
        let d = grid_sup_distance(&pts, 9, |u, v| u * v);
        assert!((d - 0.25).abs() < 0.02);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let rule = unit_interval_rule(16, 8);
        let s: f64 = rule.iter().map(|(x, w)| w * x.sqrt()).sum();
        assert!((s - 2.0 / 3.0).abs() < 1e-8, "{s}");
    }

    #[test]
    fn quadrature_tau_matches_closed_forms() {
        for alpha in [0.5, 2.0, 6.0] {
            let t = kendall_tau_quadrature(&CopulaModel::clayton(alpha).unwrap());
            assert!((t - alpha / (alpha + 2.0)).abs() < 2e-4, "{alpha}: {t}");
        }
        for alpha in [0.2, 0.5, 0.9] {
            let t = kendall_tau_quadrature(&CopulaModel::gumbel(alpha).unwrap());
            assert!((t - (1.0 - alpha)).abs() < 2e-4, "{alpha}: {t}");
        }
        assert!(kendall_tau_quadrature(&CopulaModel::Independence).abs() < 1e-12);
    }
}

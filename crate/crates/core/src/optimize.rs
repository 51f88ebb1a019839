//! Derivative-free Nelder-Mead minimization.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below `ftol * (1 + |f_best|)`.
    pub ftol: f64,
    /// ... and the simplex diameter below `xtol`.
    pub xtol: f64,
    pub initial_step: f64,
    /// Rebuild the simplex around the optimum this many times after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            ftol: 1e-10,
            xtol: 1e-7,
            initial_step: 0.5,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub n_eval: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. Non-finite values of `f` are treated as `+inf`,
/// which makes infeasible regions repel the simplex.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n_eval = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| {
        n_eval.set(n_eval.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut best = x0.to_vec();
    let mut best_f = eval(&best);
    let mut converged = false;
    for round in 0..=opts.restarts {
        let budget = opts.max_evals.saturating_sub(n_eval.get());
        if budget == 0 {
            break;
        }
        let (x, fx, ok) = run(&mut eval, &best, opts, budget);
        let improved = fx < best_f - opts.ftol * (1.0 + best_f.abs());
        if fx <= best_f {
            best = x;
            best_f = fx;
        }
        converged = ok;
        if round > 0 && !improved {
            break;
        }
    }
    Minimum {
        x: best,
        fx: best_f,
        n_eval: n_eval.get(),
        converged,
    }
}

fn run(
    eval: &mut impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NelderMeadOptions,
    budget: usize,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut used = 0usize;
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex
        .iter()
        .map(|x| {
            used += 1;
            eval(x)
        })
        .collect();

    let mut converged = false;
    while used < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|x| {
                x.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= opts.ftol * (1.0 + values[0].abs()) && diameter <= opts.xtol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(alpha);
        let fr = eval(&xr);
        used += 1;
        if fr < values[0] {
            let xe = along(gamma);
            let fe = eval(&xe);
            used += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        used += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + sigma * (x - b))
                .collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
            used += 1;
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    (simplex[best].clone(), values[best], converged)
}

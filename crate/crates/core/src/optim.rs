//! Derivative-free simplex minimization (Nelder-Mead with dimension-adaptive
//! coefficients).

/// Settings for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Convergence when `(f_worst - f_best) <= tol * (|f_best| + tol)`.
    pub tolerance: f64,
    pub max_evaluations: usize,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_evaluations: 2000, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `start`. Non-finite objective values are treated as
/// `+inf`, so the simplex simply retreats from infeasible regions.
///
/// After the first convergence the simplex is rebuilt around the best point
/// once; a collapsed simplex on a ridge otherwise reports convergence early.
/// The returned [`Minimum::converged`] is `false` when the evaluation budget
/// ran out first.
pub fn nelder_mead<F>(mut f: F, start: &[f64], opts: SimplexOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    };

    if n == 0 {
        let value = eval(start, &mut evals);
        return Minimum { point: Vec::new(), value, evaluations: evals, converged: value.is_finite() };
    }

    let nf = n as f64;
    let alpha = 1.0;
    let gamma = 1.0 + 2.0 / nf;
    let rho = 0.75 - 1.0 / (2.0 * nf);
    let sigma = 1.0 - 1.0 / nf;

    let mut best_point = start.to_vec();
    let mut best_value = f64::INFINITY;
    let mut restarts = 0;

    loop {
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(best_point.clone());
        for i in 0..n {
            let mut x = best_point.clone();
            x[i] += opts.initial_step;
            simplex.push(x);
        }
        let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

        let converged = loop {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let (fb, fw) = (values[0], values[n]);
            if fb.is_finite() && fw - fb <= opts.tolerance * (fb.abs() + opts.tolerance) {
                break true;
            }
            if evals >= opts.max_evaluations {
                break false;
            }

            let centroid: Vec<f64> =
                (0..n).map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / nf).collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
            };

            let xr = along(alpha);
            let fr = eval(&xr, &mut evals);
            if fr < values[0] {
                let xe = along(alpha * gamma);
                let fe = eval(&xe, &mut evals);
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
                let x = along(alpha * rho);
                let v = eval(&x, &mut evals);
                (x, v)
            } else {
                let x = along(-rho);
                let v = eval(&x, &mut evals);
                (x, v)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
                continue;
            }
            // Shrink towards the best vertex.
            for i in 1..=n {
                let shrunk: Vec<f64> =
                    simplex[0].iter().zip(&simplex[i]).map(|(b, x)| b + sigma * (x - b)).collect();
                values[i] = eval(&shrunk, &mut evals);
                simplex[i] = shrunk;
            }
        };

        let improved = best_value - values[0];
        let tol_gap = opts.tolerance * (values[0].abs() + opts.tolerance);
        if values[0] <= best_value {
            best_point = simplex[0].clone();
            best_value = values[0];
        }
        if !converged {
            return Minimum { point: best_point, value: best_value, evaluations: evals, converged: false };
        }
        if restarts >= 1 && improved <= tol_gap {
            return Minimum { point: best_point, value: best_value, evaluations: evals, converged: true };
        }
        if restarts >= 3 {
            return Minimum { point: best_point, value: best_value, evaluations: evals, converged: true };
        }
        restarts += 1;
    }
}

//! Exact Gaussian ARMA likelihood through the Kalman filter on the Harvey
//! state-space form.

use crate::kalman::{FilterOptions, FilterRun, Singular, StateModel};

/// Harvey representation of a zero-mean ARMA(p, q) with unit innovation
/// variance: state dimension `max(p, q + 1)`, transition with `phi` in the
/// first column and ones on the superdiagonal, disturbance loading
/// `(1, θ_1, …, θ_{r-1})`.
pub(crate) fn arma_state_model(phi: &[f64], theta: &[f64]) -> StateModel {
    let r = phi.len().max(theta.len() + 1);
    let mut transition = vec![0.0; r * r];
    for (i, &a) in phi.iter().enumerate() {
        transition[i * r] = a;
    }
    for i in 0..r - 1 {
        transition[i * r + i + 1] = 1.0;
    }
    let mut loading = vec![0.0; r];
    loading[0] = 1.0;
    for (i, &t) in theta.iter().enumerate() {
        loading[i + 1] = t;
    }
    let mut state_cov = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            state_cov[i * r + j] = loading[i] * loading[j];
        }
    }
    let mut design = vec![0.0; r];
    design[0] = 1.0;
    StateModel { dim: r, transition, design, state_cov, obs_var: 0.0 }
}

/// Solves `P = T P Tᵀ + Q` over the upper triangle of `P`.
pub(crate) fn stationary_covariance(model: &StateModel) -> Option<Vec<f64>> {
    let r = model.dim;
    let t = &model.transition;
    let m = r * (r + 1) / 2;
    let idx = |i: usize, j: usize| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        a * r - a * (a + 1) / 2 + b
    };
    let mut a = vec![0.0; m * m];
    let mut b = vec![0.0; m];
    for i in 0..r {
        for j in i..r {
            let row = idx(i, j);
            a[row * m + row] += 1.0;
            b[row] = model.state_cov[i * r + j];
            for k in 0..r {
                let tik = t[i * r + k];
                if tik == 0.0 {
                    continue;
                }
                for l in 0..r {
                    let tjl = t[j * r + l];
                    if tjl != 0.0 {
                        a[row * m + idx(k, l)] -= tik * tjl;
                    }
                }
            }
        }
    }
    solve_in_place(&mut a, &mut b, m)?;
    let mut p = vec![0.0; r * r];
    for i in 0..r {
        for j in 0..r {
            p[i * r + j] = b[idx(i, j)];
        }
    }
    Some(p)
}

/// Gaussian elimination with partial pivoting; `a` is `n × n` row-major.
pub(crate) fn solve_in_place(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in (col + 1)..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    Some(())
}

/// Kalman pass over zero-mean data with unit innovation variance.
pub(crate) fn run_filter(
    w: &[f64],
    phi: &[f64],
    theta: &[f64],
    store_states: bool,
) -> Result<FilterRun, Singular> {
    let model = arma_state_model(phi, theta);
    let p0 = stationary_covariance(&model).ok_or(Singular { time: 0, variance: 0.0 })?;
    let obs: Vec<Option<f64>> = w.iter().map(|&v| Some(v)).collect();
    // The stationary covariance is a fixed point of the prediction step, so
    // passing it as the time-zero posterior yields it as the first prior.
    model.filter(
        &vec![0.0; model.dim],
        &p0,
        &obs,
        FilterOptions { store_states, steady_state_tol: Some(1e-12) },
    )
}

/// Log-likelihood with `σ²` profiled out, and the profiled `σ²`.
pub(crate) fn concentrated(w: &[f64], phi: &[f64], theta: &[f64]) -> Option<(f64, f64)> {
    let run = run_filter(w, phi, theta, false).ok()?;
    let n = run.innovations.len() as f64;
    let mut ssq = 0.0;
    let mut logdet = 0.0;
    for i in &run.innovations {
        ssq += i.value * i.value / i.variance;
        logdet += i.variance.ln();
    }
    let sigma2 = ssq / n;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return None;
    }
    let ll = -0.5 * n * ((2.0 * std::f64::consts::PI).ln() + 1.0 + sigma2.ln()) - 0.5 * logdet;
    Some((ll, sigma2))
}

/// Exact log-likelihood of zero-mean data under ARMA(`phi`, `theta`) with
/// innovation variance `sigma2`.
pub(crate) fn exact(w: &[f64], phi: &[f64], theta: &[f64], sigma2: f64) -> Option<f64> {
    let run = run_filter(w, phi, theta, false).ok()?;
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    Some(
        run.innovations
            .iter()
            .map(|i| {
                let f = i.variance * sigma2;
                -0.5 * (ln2pi + f.ln() + i.value * i.value / f)
            })
            .sum(),
    )
}

/// Conditional sum of squares objective, `(m/2)·ln(CSS/m)` over the
/// `m = n - p` residuals computable without pre-sample values.
pub(crate) fn css_objective(w: &[f64], phi: &[f64], theta: &[f64]) -> f64 {
    let p = phi.len();
    let n = w.len();
    if n <= p {
        return f64::INFINITY;
    }
    let mut e = vec![0.0; n];
    let mut ssq = 0.0;
    for t in p..n {
        let mut v = w[t];
        for (i, a) in phi.iter().enumerate() {
            v -= a * w[t - 1 - i];
        }
        for (j, b) in theta.iter().enumerate() {
            if t > j {
                v -= b * e[t - 1 - j];
            }
        }
        e[t] = v;
        ssq += v * v;
    }
    let m = (n - p) as f64;
    0.5 * m * (ssq / m).ln()
}

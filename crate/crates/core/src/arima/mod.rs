//! ARIMA(p, d, q) models: exact maximum-likelihood fitting, automatic order
//! selection, simulation and Gaussian forecasting.
//!
//! The differenced series `w(t)` follows
//!
//! ```text
//! w(t) - μ = Σ φ_i (w(t-i) - μ) + ε(t) + Σ θ_j ε(t-j)
//! ```
//!
//! with intercept `c = μ (1 - Σ φ_i)`. The mean is estimated (as the sample
//! mean) only for `d = 0`; differenced models carry no drift.

mod likelihood;
pub mod params;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optim::{nelder_mead, SimplexOptions};
use crate::series::{self, CalendarPoint, SeriesError, TimeSeries};
use crate::special::two_sided_z;

pub use params::{is_invertible, is_stationary, min_root_modulus};

pub const MAX_P: usize = 5;
pub const MAX_D: usize = 2;
pub const MAX_Q: usize = 5;

/// Steps discarded before [`simulate_arima`] starts emitting values.
pub const BURN_IN: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArimaError {
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate series: {0}")]
    Degenerate(String),
    #[error("optimizer did not converge: {0}")]
    Convergence(String),
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error("invalid model order: {0}")]
    Spec(String),
    #[error("no candidate model could be fitted")]
    NoModel,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ArimaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaSpec {
    pub fn new(p: usize, d: usize, q: usize) -> Result<Self, ArimaError> {
        let spec = Self { p, d, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ArimaError> {
        if self.p > MAX_P || self.d > MAX_D || self.q > MAX_Q {
            return Err(ArimaError::Spec(format!(
                "({}, {}, {}) outside p <= {MAX_P}, d <= {MAX_D}, q <= {MAX_Q}",
                self.p, self.d, self.q
            )));
        }
        Ok(())
    }

    /// Minimum series length accepted by [`fit_arima`].
    pub fn min_length(&self) -> usize {
        self.d + 8usize.max(3 * (self.p + self.q) + 2)
    }
}

impl std::fmt::Display for ArimaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ARIMA({},{},{})", self.p, self.d, self.q)
    }
}

/// Coefficients of an ARIMA model, independent of any data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaParams {
    pub c: f64,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: f64,
}

impl ArimaParams {
    /// Process mean on the differenced scale, `c / (1 - Σφ)`.
    pub fn mean(&self) -> f64 {
        self.c / (1.0 - self.phi.iter().sum::<f64>())
    }

    fn check(&self, spec: &ArimaSpec) -> Result<(), ArimaError> {
        spec.validate()?;
        if self.phi.len() != spec.p || self.theta.len() != spec.q {
            return Err(ArimaError::Param(format!(
                "expected {} AR and {} MA coefficients, got {} and {}",
                spec.p,
                spec.q,
                self.phi.len(),
                self.theta.len()
            )));
        }
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() || !self.c.is_finite() {
            return Err(ArimaError::Param("sigma2 must be finite and non-negative".into()));
        }
        if !is_stationary(&self.phi) {
            return Err(ArimaError::Param("AR polynomial is not stationary".into()));
        }
        if !is_invertible(&self.theta) {
            return Err(ArimaError::Param("MA polynomial is not invertible".into()));
        }
        Ok(())
    }
}

/// A fitted (or explicitly parameterized) ARIMA model together with the
/// history it conditions on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArimaFit {
    pub spec: ArimaSpec,
    pub c: f64,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    /// One-step prediction errors on the differenced scale.
    pub residuals: TimeSeries,
    pub loglik: f64,
    pub aic: f64,
    pub n_effective: usize,
    /// Mean of the differenced process (zero when `d >= 1` unless supplied).
    pub mean: f64,
    #[serde(skip)]
    history: TimeSeries,
}

impl ArimaFit {
    /// Builds a fit from known coefficients, computing residuals and the
    /// exact log-likelihood by filtering `history`.
    pub fn from_parameters(
        history: &TimeSeries,
        spec: ArimaSpec,
        params: ArimaParams,
    ) -> Result<Self, ArimaError> {
        params.check(&spec)?;
        let diffed = series::difference(history, spec.d)?;
        let mean = params.mean();
        let w: Vec<f64> = diffed.values().iter().map(|v| v - mean).collect();
        let (residuals, loglik) = if params.sigma2 > 0.0 {
            let run = likelihood::run_filter(&w, &params.phi, &params.theta, false)
                .map_err(|_| ArimaError::Degenerate("singular innovation variance".into()))?;
            let res = run.innovations.iter().map(|i| i.value / i.variance.sqrt()).collect();
            let ll = likelihood::exact(&w, &params.phi, &params.theta, params.sigma2)
                .ok_or_else(|| ArimaError::Degenerate("singular innovation variance".into()))?;
            (res, ll)
        } else {
            (vec![0.0; w.len()], f64::NAN)
        };
        Self::assemble(history, spec, params, mean, diffed.with_values(residuals)?, loglik)
    }

    /// Like [`ArimaFit::from_parameters`] but with caller-supplied residuals
    /// (one per differenced observation).
    pub fn from_parts(
        history: &TimeSeries,
        spec: ArimaSpec,
        params: ArimaParams,
        residuals: Vec<f64>,
    ) -> Result<Self, ArimaError> {
        let mut fit = Self::from_parameters(history, spec, params)?;
        if residuals.len() != fit.n_effective {
            return Err(ArimaError::Param(format!(
                "expected {} residuals, got {}",
                fit.n_effective,
                residuals.len()
            )));
        }
        fit.residuals = fit.residuals.with_values(residuals)?;
        Ok(fit)
    }

    fn assemble(
        history: &TimeSeries,
        spec: ArimaSpec,
        params: ArimaParams,
        mean: f64,
        residuals: TimeSeries,
        loglik: f64,
    ) -> Result<Self, ArimaError> {
        let n_effective = history.len() - spec.d;
        let k = (spec.p + spec.q + 2) as f64;
        Ok(Self {
            spec,
            c: params.c,
            phi: params.phi,
            theta: params.theta,
            sigma2: params.sigma2,
            residuals,
            loglik,
            aic: 2.0 * k - 2.0 * loglik,
            n_effective,
            mean,
            history: history.clone(),
        })
    }

    pub fn history(&self) -> &TimeSeries {
        &self.history
    }

    pub fn params(&self) -> ArimaParams {
        ArimaParams { c: self.c, phi: self.phi.clone(), theta: self.theta.clone(), sigma2: self.sigma2 }
    }

    /// Number of estimated ARMA coefficients, the degrees-of-freedom
    /// adjustment for portmanteau tests.
    pub fn arma_parameter_count(&self) -> usize {
        self.spec.p + self.spec.q
    }

    /// Asymptotic standard errors of `[φ..., θ...]` from a central-difference
    /// Hessian of the profile log-likelihood.
    pub fn standard_errors(&self) -> Result<Vec<f64>, ArimaError> {
        let (p, q) = (self.spec.p, self.spec.q);
        let k = p + q;
        if k == 0 {
            return Ok(Vec::new());
        }
        let diffed = series::difference(&self.history, self.spec.d)?;
        let w: Vec<f64> = diffed.values().iter().map(|v| v - self.mean).collect();
        let theta0: Vec<f64> = self.phi.iter().chain(&self.theta).copied().collect();
        let ll = |x: &[f64]| -> Option<f64> {
            let (phi, theta) = x.split_at(p);
            if !is_stationary(phi) || !is_invertible(theta) {
                return None;
            }
            likelihood::concentrated(&w, phi, theta).map(|(ll, _)| ll)
        };
        let h = 1e-4;
        let f0 = ll(&theta0).ok_or_else(|| ArimaError::Param("fit is on the boundary".into()))?;
        let mut hess = nalgebra::DMatrix::<f64>::zeros(k, k);
        let bump = |i: usize, di: f64, j: usize, dj: f64| -> Option<f64> {
            let mut x = theta0.clone();
            x[i] += di;
            x[j] += dj;
            ll(&x)
        };
        let boundary = || ArimaError::Param("estimate too close to the stationarity boundary".into());
        for i in 0..k {
            let fp = bump(i, h, i, 0.0).ok_or_else(boundary)?;
            let fm = bump(i, -h, i, 0.0).ok_or_else(boundary)?;
            hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
            for j in 0..i {
                let fpp = bump(i, h, j, h).ok_or_else(boundary)?;
                let fpm = bump(i, h, j, -h).ok_or_else(boundary)?;
                let fmp = bump(i, -h, j, h).ok_or_else(boundary)?;
                let fmm = bump(i, -h, j, -h).ok_or_else(boundary)?;
                let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        let cov = (-hess)
            .try_inverse()
            .ok_or_else(|| ArimaError::Degenerate("singular information matrix".into()))?;
        (0..k)
            .map(|i| {
                let v = cov[(i, i)];
                if v > 0.0 {
                    Ok(v.sqrt())
                } else {
                    Err(ArimaError::Degenerate("information matrix is not positive definite".into()))
                }
            })
            .collect()
    }
}

/// Fits ARIMA(p, d, q) by exact Gaussian maximum likelihood.
///
/// Starting values come from a conditional-sum-of-squares pass; both stages
/// run the simplex optimizer in the unconstrained partial-autocorrelation
/// parameterization, so every candidate is stationary and invertible.
pub fn fit_arima(series: &TimeSeries, spec: ArimaSpec) -> Result<ArimaFit, ArimaError> {
    spec.validate()?;
    let needed = spec.min_length();
    if series.len() < needed {
        return Err(ArimaError::TooShort { needed, got: series.len() });
    }
    let diffed = series::difference(series, spec.d)?;
    let var = series::variance(diffed.values()).unwrap_or(0.0);
    if !(var > 0.0) {
        return Err(ArimaError::Degenerate("zero variance after differencing".into()));
    }
    let include_mean = spec.d == 0;
    let mean = if include_mean {
        diffed.values().iter().sum::<f64>() / diffed.len() as f64
    } else {
        0.0
    };
    let scale = var.sqrt();
    let w: Vec<f64> = diffed.values().iter().map(|v| (v - mean) / scale).collect();
    let (p, q) = (spec.p, spec.q);

    let css = nelder_mead(
        |x| {
            let (phi, theta) = params::unpack(x, p, q);
            likelihood::css_objective(&w, &phi, &theta)
        },
        &vec![0.0; p + q],
        SimplexOptions { tolerance: 1e-6, max_evaluations: 1000, initial_step: 0.1 },
    );
    let start = if css.value.is_finite() { css.point } else { vec![0.0; p + q] };

    let neg_ll = |x: &[f64]| {
        let (phi, theta) = params::unpack(x, p, q);
        likelihood::concentrated(&w, &phi, &theta).map_or(f64::INFINITY, |(ll, _)| -ll)
    };
    let opt = nelder_mead(neg_ll, &start, SimplexOptions::default());
    if !opt.converged {
        return Err(ArimaError::Convergence(format!(
            "{spec}: {} evaluations without meeting the tolerance",
            opt.evaluations
        )));
    }
    let (phi, theta) = params::unpack(&opt.point, p, q);
    if !is_stationary(&phi) || !is_invertible(&theta) {
        return Err(ArimaError::Convergence(format!("{spec}: estimate on the stationarity boundary")));
    }

    let w_raw: Vec<f64> = diffed.values().iter().map(|v| v - mean).collect();
    let (loglik, sigma2) = likelihood::concentrated(&w_raw, &phi, &theta)
        .ok_or_else(|| ArimaError::Degenerate("likelihood could not be evaluated".into()))?;
    let run = likelihood::run_filter(&w_raw, &phi, &theta, false)
        .map_err(|_| ArimaError::Degenerate("singular innovation variance".into()))?;
    let residuals: Vec<f64> = run.innovations.iter().map(|i| i.value / i.variance.sqrt()).collect();
    let c = mean * (1.0 - phi.iter().sum::<f64>());
    let params = ArimaParams { c, phi, theta, sigma2 };
    ArimaFit::assemble(series, spec, params, mean, diffed.with_values(residuals)?, loglik)
}

/// Differencing order chosen by [`auto_arima`]: the smallest `d` whose
/// differenced series has lag-one autocorrelation below 0.95 in magnitude
/// and (for `d >= 1`) variance no larger than at `d - 1`. Falls back to the
/// maximum order when no candidate qualifies.
pub fn select_differencing(series: &TimeSeries) -> Result<usize, ArimaError> {
    let mut prev_var: Option<f64> = None;
    for d in 0..=MAX_D {
        let diffed = series::difference_values(series.values(), d);
        let var = series::variance(&diffed).unwrap_or(0.0);
        let rho1 = series::acf_values(&diffed, 1).map(|a| a.coefficients[0]);
        let rho_ok = match rho1 {
            Ok(r) => r.abs() < 0.95,
            Err(SeriesError::Degenerate(_)) if d == 0 => {
                return Err(ArimaError::Degenerate("constant series".into()))
            }
            Err(_) => false,
        };
        let var_ok = prev_var.is_none_or(|pv| var <= pv);
        if rho_ok && var_ok {
            return Ok(d);
        }
        prev_var = Some(var);
    }
    Ok(MAX_D)
}

/// Candidate `(p, q)` orders searched by [`auto_arima`].
pub fn candidate_orders() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for p in 0..=MAX_P {
        for q in 0..=MAX_Q {
            if p + q <= 6 {
                out.push((p, q));
            }
        }
    }
    out
}

/// Candidates whose AR or MA roots lie within this modulus are not eligible
/// for automatic selection.
pub const SELECTION_ROOT_MODULUS: f64 = 1.01;

/// Chooses `d` by [`select_differencing`], then fits every `(p, q)` with
/// `p, q <= 5`, `p + q <= 6` and keeps the minimum-AIC model. Failed fits and
/// fits with roots inside [`SELECTION_ROOT_MODULUS`] are skipped; ties go to
/// the smaller `p + q`, then the smaller `p`.
pub fn auto_arima(series: &TimeSeries) -> Result<ArimaFit, ArimaError> {
    if series.len() < 10 {
        return Err(ArimaError::TooShort { needed: 10, got: series.len() });
    }
    let d = select_differencing(series)?;
    let mut best: Option<ArimaFit> = None;
    for (p, q) in candidate_orders() {
        let spec = ArimaSpec { p, d, q };
        let fit = match fit_arima(series, spec) {
            Ok(fit) if fit.aic.is_finite() && !near_unit_root(&fit) => fit,
            Ok(_) => continue,
            Err(e) => {
                log::debug!("auto_arima skipping {spec}: {e}");
                continue;
            }
        };
        let better = match &best {
            None => true,
            Some(b) => {
                let key = |f: &ArimaFit| (f.spec.p + f.spec.q, f.spec.p);
                fit.aic < b.aic || (fit.aic == b.aic && key(&fit) < key(b))
            }
        };
        if better {
            best = Some(fit);
        }
    }
    best.ok_or(ArimaError::NoModel)
}

fn near_unit_root(fit: &ArimaFit) -> bool {
    let neg: Vec<f64> = fit.theta.iter().map(|t| -t).collect();
    min_root_modulus(&fit.phi) <= SELECTION_ROOT_MODULUS || min_root_modulus(&neg) <= SELECTION_ROOT_MODULUS
}

/// Point forecasts with symmetric Gaussian bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub horizon: usize,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub unit: String,
    /// Calendar position of the first forecast step.
    pub start: CalendarPoint,
}

impl ForecastResult {
    pub fn half_widths(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.mean).map(|(u, m)| u - m).collect()
    }
}

/// Future values on the original scale given future innovations. With
/// `innovations` all zero this is the conditional-mean forecast.
pub(crate) fn project(fit: &ArimaFit, innovations: &[f64]) -> Vec<f64> {
    let d = fit.spec.d;
    let diffed = series::difference_values(fit.history.values(), d);
    let mu = fit.mean;
    let mut w: Vec<f64> = diffed.iter().map(|v| v - mu).collect();
    let mut e: Vec<f64> = fit.residuals.values().to_vec();
    let n = w.len();
    for &shock in innovations {
        let t = w.len();
        let mut v = shock;
        for (i, a) in fit.phi.iter().enumerate() {
            if t > i {
                v += a * w[t - 1 - i];
            }
        }
        for (j, b) in fit.theta.iter().enumerate() {
            if t > j {
                v += b * e[t - 1 - j];
            }
        }
        w.push(v);
        e.push(shock);
    }
    let future: Vec<f64> = w[n..].iter().map(|v| v + mu).collect();
    let values = fit.history.values();
    series::integrate(&future, &values[values.len() - d..])
}

/// Coefficients of the MA(∞) representation of the full ARIMA operator,
/// `ψ_0 .. ψ_{count-1}`.
pub fn psi_weights(phi: &[f64], theta: &[f64], d: usize, count: usize) -> Vec<f64> {
    // φ*(B) = φ(B)(1 - B)^d, written as 1 - Σ a_i B^i.
    let mut poly = vec![1.0];
    poly.extend(phi.iter().map(|p| -p));
    for _ in 0..d {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c;
        }
        poly = next;
    }
    let ar: Vec<f64> = poly[1..].iter().map(|c| -c).collect();
    let mut psi = Vec::with_capacity(count);
    for j in 0..count {
        let mut v = if j == 0 { 1.0 } else { theta.get(j - 1).copied().unwrap_or(0.0) };
        for (i, a) in ar.iter().enumerate() {
            if j > i {
                v += a * psi[j - 1 - i];
            }
        }
        psi.push(v);
    }
    psi
}

/// Forecasts `horizon` steps with Gaussian bounds at confidence `level`.
pub fn forecast_arima(fit: &ArimaFit, horizon: usize, level: f64) -> Result<ForecastResult, ArimaError> {
    if horizon < 1 {
        return Err(ArimaError::Horizon);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(ArimaError::Param(format!("confidence level {level} outside (0, 1)")));
    }
    let mean = project(fit, &vec![0.0; horizon]);
    let psi = psi_weights(&fit.phi, &fit.theta, fit.spec.d, horizon);
    let z = two_sided_z(level);
    let mut cum = 0.0;
    let mut lower = Vec::with_capacity(horizon);
    let mut upper = Vec::with_capacity(horizon);
    for (m, w) in mean.iter().zip(&psi) {
        cum += w * w;
        let half = z * (fit.sigma2 * cum).sqrt();
        lower.push(m - half);
        upper.push(m + half);
    }
    Ok(ForecastResult {
        horizon,
        mean,
        lower,
        upper,
        level,
        unit: fit.history.unit().to_string(),
        start: fit.history.end().advance(1),
    })
}

/// Simulates `n` values of an ARIMA process from a seeded generator,
/// discarding [`BURN_IN`] warm-up steps of the ARMA part. Integration
/// (for `d >= 1`) starts from zero.
pub fn simulate_arima(
    spec: ArimaSpec,
    params: &ArimaParams,
    n: usize,
    seed: u64,
) -> Result<TimeSeries, ArimaError> {
    params.check(&spec)?;
    if n == 0 {
        return Err(ArimaError::Param("n must be at least 1".into()));
    }
    let normal = Normal::new(0.0, params.sigma2.sqrt()).map_err(|e| ArimaError::Param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = BURN_IN + n;
    let mut y = Vec::with_capacity(total);
    let mut e = Vec::with_capacity(total);
    for t in 0..total {
        let shock = normal.sample(&mut rng);
        let mut v = params.c + shock;
        for (i, a) in params.phi.iter().enumerate() {
            if t > i {
                v += a * y[t - 1 - i];
            }
        }
        for (j, b) in params.theta.iter().enumerate() {
            if t > j {
                v += b * e[t - 1 - j];
            }
        }
        y.push(v);
        e.push(shock);
    }
    let arma = y.split_off(BURN_IN);
    let values = series::integrate(&arma, &vec![0.0; spec.d]);
    Ok(TimeSeries::from_values(values)?)
}

/// Exact log-likelihood of zero-mean data `values` under an ARMA model with
/// the given coefficients and innovation variance.
pub fn arma_loglik(values: &[f64], phi: &[f64], theta: &[f64], sigma2: f64) -> Result<f64, ArimaError> {
    if !is_stationary(phi) || !is_invertible(theta) {
        return Err(ArimaError::Param("coefficients outside the stationary/invertible region".into()));
    }
    if !(sigma2 > 0.0) {
        return Err(ArimaError::Param("sigma2 must be positive".into()));
    }
    likelihood::exact(values, phi, theta, sigma2)
        .ok_or_else(|| ArimaError::Degenerate("singular innovation variance".into()))
}

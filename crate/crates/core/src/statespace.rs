//! Structural state-space models: local level and local linear trend.
//!
//! ```text
//! x(t) = A·x(t-1) + B·u(t) + w(t)     w ~ N(0, diag(q))
//! y(t) = C·x(t) + v(t)                v ~ N(0, r)
//! ```
//!
//! Variances are estimated by maximizing the prediction-error likelihood
//! with a finite diffuse prior on the initial state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arima::ForecastResult;
use crate::kalman::{self, StateModel, SINGULAR_VARIANCE};
use crate::optim::{nelder_mead, SimplexOptions};
use crate::series::{self, SeriesError, TimeSeries};
use crate::special::two_sided_z;

/// Prior variance of the initial state, as a multiple of the sample variance.
pub const DIFFUSE_SCALE: f64 = 1e7;

/// Log-variance floor used during estimation.
pub const LOG_VARIANCE_FLOOR: f64 = -30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateSpaceError {
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate series: {0}")]
    Degenerate(String),
    #[error("optimizer did not converge after {0} evaluations")]
    Convergence(usize),
    #[error("innovation variance {variance:e} is singular at step {time}")]
    Singular { time: usize, variance: f64 },
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StructuralKind {
    LocalLevel,
    LocalTrend,
}

impl StructuralKind {
    pub fn state_dim(self) -> usize {
        match self {
            StructuralKind::LocalLevel => 1,
            StructuralKind::LocalTrend => 2,
        }
    }

    /// Minimum series length accepted by [`fit_structural`].
    pub fn min_length(self) -> usize {
        match self {
            StructuralKind::LocalLevel => 4,
            StructuralKind::LocalTrend => 6,
        }
    }

    pub fn transition(self) -> Vec<f64> {
        match self {
            StructuralKind::LocalLevel => vec![1.0],
            StructuralKind::LocalTrend => vec![1.0, 1.0, 0.0, 1.0],
        }
    }

    pub fn observation(self) -> Vec<f64> {
        match self {
            StructuralKind::LocalLevel => vec![1.0],
            StructuralKind::LocalTrend => vec![1.0, 0.0],
        }
    }
}

/// External control `B·u(t)`: `matrix` is `state_dim × m`, `signal` holds one
/// `m`-vector per historical time step (it may be shorter than the history,
/// in which case later steps carry no control).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub matrix: Vec<Vec<f64>>,
    pub signal: Vec<Vec<f64>>,
}

impl ControlInput {
    fn effect(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.iter().map(|row| row.iter().zip(u).map(|(b, x)| b * x).sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpaceSpec {
    pub kind: StructuralKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlInput>,
}

impl StateSpaceSpec {
    pub fn new(kind: StructuralKind) -> Self {
        Self { kind, control: None }
    }

    fn validate_control(&self) -> Result<(), StateSpaceError> {
        if let Some(c) = &self.control {
            let dim = self.kind.state_dim();
            if c.matrix.len() != dim {
                return Err(StateSpaceError::Invalid(format!("control matrix needs {dim} rows")));
            }
            let m = c.matrix[0].len();
            if c.matrix.iter().any(|r| r.len() != m) || c.signal.iter().any(|u| u.len() != m) {
                return Err(StateSpaceError::Invalid("control dimensions disagree".into()));
            }
        }
        Ok(())
    }
}

/// Process-noise variances (one per state component) and the observation
/// noise variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variances {
    pub q: Vec<f64>,
    pub r: f64,
}

fn state_model(kind: StructuralKind, v: &Variances) -> StateModel {
    let dim = kind.state_dim();
    let mut state_cov = vec![0.0; dim * dim];
    for i in 0..dim {
        state_cov[i * dim + i] = v.q[i];
    }
    StateModel {
        dim,
        transition: kind.transition(),
        design: kind.observation(),
        state_cov,
        obs_var: v.r,
    }
}

fn check_variances(kind: StructuralKind, v: &Variances) -> Result<(), StateSpaceError> {
    if v.q.len() != kind.state_dim() {
        return Err(StateSpaceError::Invalid(format!("{kind:?} needs {} process variances", kind.state_dim())));
    }
    if v.q.iter().chain(std::iter::once(&v.r)).any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(StateSpaceError::Invalid("variances must be finite and non-negative".into()));
    }
    Ok(())
}

/// Output of one predict-then-update recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanStep {
    pub mean: Vec<f64>,
    /// Row-major `dim × dim` covariance.
    pub cov: Vec<f64>,
    /// `None` when the observation was missing.
    pub innovation: Option<f64>,
    pub innovation_var: Option<f64>,
}

/// Advances the posterior `(prior_mean, prior_cov)` at `t-1` through the
/// state equation and, unless `observation` is missing, updates on it.
pub fn kalman_step(
    prior_mean: &[f64],
    prior_cov: &[f64],
    observation: Option<f64>,
    spec: &StateSpaceSpec,
    variances: &Variances,
) -> Result<KalmanStep, StateSpaceError> {
    check_variances(spec.kind, variances)?;
    let dim = spec.kind.state_dim();
    if prior_mean.len() != dim || prior_cov.len() != dim * dim {
        return Err(StateSpaceError::Invalid(format!("state dimension is {dim}")));
    }
    let model = state_model(spec.kind, variances);
    let (pm, pc) = model.predict(prior_mean, prior_cov, None);
    match observation {
        None => Ok(KalmanStep { mean: pm, cov: pc, innovation: None, innovation_var: None }),
        Some(y) => {
            let (mean, cov, v, f) =
                model.update(&pm, &pc, y).map_err(|variance| StateSpaceError::Singular { time: 0, variance })?;
            Ok(KalmanStep { mean, cov, innovation: Some(v), innovation_var: Some(f) })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredState {
    pub mean: Vec<f64>,
    pub cov: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSpaceFit {
    pub spec: StateSpaceSpec,
    pub q_variances: Vec<f64>,
    pub r_variance: f64,
    pub loglik: f64,
    /// `2·k - 2·loglik` with `k` the number of variance parameters.
    pub aic: f64,
    /// Posterior state after each observation.
    #[serde(skip)]
    pub filtered_states: Vec<FilteredState>,
    /// Standardized one-step innovations after the diffuse start-up period.
    pub residuals: TimeSeries,
    #[serde(skip)]
    history: TimeSeries,
}

impl StateSpaceFit {
    pub fn history(&self) -> &TimeSeries {
        &self.history
    }

    pub fn kind(&self) -> StructuralKind {
        self.spec.kind
    }

    pub fn variances(&self) -> Variances {
        Variances { q: self.q_variances.clone(), r: self.r_variance }
    }
}

fn diffuse_prior(kind: StructuralKind, series: &TimeSeries) -> (Vec<f64>, Vec<f64>) {
    let dim = kind.state_dim();
    let var = series::variance(series.values()).unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let mut cov = vec![0.0; dim * dim];
    for i in 0..dim {
        cov[i * dim + i] = DIFFUSE_SCALE * var;
    }
    (vec![0.0; dim], cov)
}

struct Filtered {
    run: kalman::FilterRun,
    loglik: f64,
}

fn run(
    spec: &StateSpaceSpec,
    variances: &Variances,
    values: &[f64],
    prior: &(Vec<f64>, Vec<f64>),
    store_states: bool,
) -> Result<Filtered, StateSpaceError> {
    let model = state_model(spec.kind, variances);
    let dim = model.dim;
    let (mut mean, mut cov) = prior.clone();
    let mut out = kalman::FilterRun::default();
    for (t, &y) in values.iter().enumerate() {
        let control = spec
            .control
            .as_ref()
            .and_then(|c| c.signal.get(t).map(|u| c.effect(u)));
        let (pm, pc) = model.predict(&mean, &cov, control.as_deref());
        let (m, p, v, f) =
            model.update(&pm, &pc, y).map_err(|variance| StateSpaceError::Singular { time: t, variance })?;
        mean = m;
        cov = p;
        out.innovations.push(kalman::Innovation { time: t, value: v, variance: f });
        if store_states {
            out.means.push(mean.clone());
            out.covs.push(cov.clone());
        }
    }
    out.final_mean = mean;
    out.final_cov = cov;
    let loglik = kalman::loglik(&out.innovations, dim);
    debug_assert!(out.innovations.iter().all(|i| i.variance > SINGULAR_VARIANCE));
    Ok(Filtered { run: out, loglik })
}

fn check_series(series: &TimeSeries, kind: StructuralKind) -> Result<(), StateSpaceError> {
    if series.len() < kind.min_length() {
        return Err(StateSpaceError::TooShort { needed: kind.min_length(), got: series.len() });
    }
    if !(series::variance(series.values()).unwrap_or(0.0) > 0.0) {
        return Err(StateSpaceError::Degenerate("zero variance".into()));
    }
    Ok(())
}

/// Filters `series` with fixed variances, producing a fit without any
/// estimation. Useful for what-if analysis and as a reference path.
pub fn filter_structural(
    series: &TimeSeries,
    spec: StateSpaceSpec,
    variances: Variances,
) -> Result<StateSpaceFit, StateSpaceError> {
    check_variances(spec.kind, &variances)?;
    spec.validate_control()?;
    check_series(series, spec.kind)?;
    let prior = diffuse_prior(spec.kind, series);
    let filtered = run(&spec, &variances, series.values(), &prior, true)?;
    Ok(assemble(series, spec, variances, filtered))
}

fn assemble(series: &TimeSeries, spec: StateSpaceSpec, variances: Variances, filtered: Filtered) -> StateSpaceFit {
    let dim = spec.kind.state_dim();
    let residuals: Vec<f64> = filtered
        .run
        .innovations
        .iter()
        .filter(|i| i.time >= dim)
        .map(|i| i.value / i.variance.sqrt())
        .collect();
    let k = (dim + 1) as f64;
    let filtered_states = filtered
        .run
        .means
        .into_iter()
        .zip(filtered.run.covs)
        .map(|(mean, cov)| FilteredState { mean, cov })
        .collect();
    StateSpaceFit {
        spec,
        q_variances: variances.q,
        r_variance: variances.r,
        loglik: filtered.loglik,
        aic: 2.0 * k - 2.0 * filtered.loglik,
        filtered_states,
        residuals: series.derive(residuals, dim as i64),
        history: series.clone(),
    }
}

/// Log-likelihood of `series` under the given variances (diffuse prior,
/// first `state_dim` observations conditioned on).
pub fn structural_loglik(
    series: &TimeSeries,
    kind: StructuralKind,
    variances: &Variances,
) -> Result<f64, StateSpaceError> {
    check_variances(kind, variances)?;
    let spec = StateSpaceSpec::new(kind);
    let prior = diffuse_prior(kind, series);
    Ok(run(&spec, variances, series.values(), &prior, false)?.loglik)
}

/// Estimates the noise variances by maximum likelihood.
pub fn fit_structural(series: &TimeSeries, kind: StructuralKind) -> Result<StateSpaceFit, StateSpaceError> {
    fit_structural_spec(series, StateSpaceSpec::new(kind))
}

/// [`fit_structural`] with a full spec, so a known control input is honoured
/// while filtering. The control matrix itself is never estimated.
pub fn fit_structural_spec(series: &TimeSeries, spec: StateSpaceSpec) -> Result<StateSpaceFit, StateSpaceError> {
    spec.validate_control()?;
    check_series(series, spec.kind)?;
    let dim = spec.kind.state_dim();

    // Optimize on the standardized series; variances scale by sd².
    let var = series::variance(series.values()).unwrap_or(1.0);
    let sd = var.sqrt();
    let scaled: Vec<f64> = series.values().iter().map(|v| v / sd).collect();
    let scaled_spec = StateSpaceSpec {
        kind: spec.kind,
        control: spec.control.as_ref().map(|c| ControlInput {
            matrix: c.matrix.iter().map(|r| r.iter().map(|b| b / sd).collect()).collect(),
            signal: c.signal.clone(),
        }),
    };
    let prior = {
        let mut cov = vec![0.0; dim * dim];
        for i in 0..dim {
            cov[i * dim + i] = DIFFUSE_SCALE;
        }
        (vec![0.0; dim], cov)
    };
    let unpack = |x: &[f64]| Variances {
        q: x[..dim].iter().map(|v| v.max(LOG_VARIANCE_FLOOR).exp()).collect(),
        r: x[dim].max(LOG_VARIANCE_FLOOR).exp(),
    };
    let objective = |x: &[f64]| {
        run(&scaled_spec, &unpack(x), &scaled, &prior, false).map_or(f64::INFINITY, |f| -f.loglik)
    };

    let dvar = series::variance(&series::difference_values(&scaled, 1)).unwrap_or(1.0).max(1e-8);
    let base = dvar.ln();
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for &(lq, lr) in &[(-0.7, -0.7), (0.0, -7.0), (-7.0, 0.0)] {
        let mut x = vec![base + lq; dim];
        if dim == 2 {
            x[1] = base + lq - 4.0;
        }
        x.push(base + lr);
        starts.push(x);
    }
    let mut best: Option<crate::optim::Minimum> = None;
    for start in &starts {
        let m = nelder_mead(objective, start, SimplexOptions { initial_step: 1.0, ..Default::default() });
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged {
        return Err(StateSpaceError::Convergence(best.evaluations));
    }
    if !best.value.is_finite() {
        return Err(StateSpaceError::Degenerate("likelihood could not be evaluated".into()));
    }
    let fitted = unpack(&best.point);
    let variances = Variances { q: fitted.q.iter().map(|q| q * var).collect(), r: fitted.r * var };
    let prior = diffuse_prior(spec.kind, series);
    let filtered = run(&spec, &variances, series.values(), &prior, true)?;
    Ok(assemble(series, spec, variances, filtered))
}

/// Fits both structural variants and keeps the one with the higher
/// log-likelihood.
pub fn fit_best_structural(series: &TimeSeries) -> Result<StateSpaceFit, StateSpaceError> {
    let level = fit_structural(series, StructuralKind::LocalLevel);
    let trend = fit_structural(series, StructuralKind::LocalTrend);
    match (level, trend) {
        (Ok(a), Ok(b)) => Ok(if b.loglik > a.loglik { b } else { a }),
        (Ok(a), Err(_)) => Ok(a),
        (Err(_), Ok(b)) => Ok(b),
        (Err(e), Err(_)) => Err(e),
    }
}

/// Forecasts `horizon` steps from the last filtered state.
pub fn forecast_structural(
    fit: &StateSpaceFit,
    horizon: usize,
    level: f64,
) -> Result<ForecastResult, StateSpaceError> {
    forecast_structural_with_control(fit, horizon, level, None)
}

/// As [`forecast_structural`], adding `B·u(t)` for each supplied future
/// control vector.
pub fn forecast_structural_with_control(
    fit: &StateSpaceFit,
    horizon: usize,
    level: f64,
    future_control: Option<&[Vec<f64>]>,
) -> Result<ForecastResult, StateSpaceError> {
    if horizon < 1 {
        return Err(StateSpaceError::Horizon);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StateSpaceError::Invalid(format!("confidence level {level} outside (0, 1)")));
    }
    let last = fit
        .filtered_states
        .last()
        .ok_or_else(|| StateSpaceError::Invalid("fit has no filtered states".into()))?;
    let model = state_model(fit.spec.kind, &fit.variances());
    let z = two_sided_z(level);
    let (mut mean, mut cov) = (last.mean.clone(), last.cov.clone());
    let design = fit.spec.kind.observation();
    let dim = model.dim;
    let mut out = ForecastResult {
        horizon,
        mean: Vec::with_capacity(horizon),
        lower: Vec::with_capacity(horizon),
        upper: Vec::with_capacity(horizon),
        level,
        unit: fit.history.unit().to_string(),
        start: fit.history.end().advance(1),
    };
    for h in 0..horizon {
        let control = match (&fit.spec.control, future_control.and_then(|u| u.get(h))) {
            (Some(c), Some(u)) => Some(c.effect(u)),
            _ => None,
        };
        let (m, p) = model.predict(&mean, &cov, control.as_deref());
        mean = m;
        cov = p;
        let y = design.iter().zip(&mean).map(|(a, b)| a * b).sum::<f64>();
        let var: f64 = (0..dim)
            .map(|i| (0..dim).map(|j| design[i] * cov[i * dim + j] * design[j]).sum::<f64>())
            .sum::<f64>()
            + fit.r_variance;
        let half = z * var.max(0.0).sqrt();
        out.mean.push(y);
        out.lower.push(y - half);
        out.upper.push(y + half);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level_spec() -> StateSpaceSpec {
        StateSpaceSpec::new(StructuralKind::LocalLevel)
    }

    #[test]
    fn conjugate_update_example() {
        let step = kalman_step(&[0.0], &[1.0], Some(2.0), &level_spec(), &Variances { q: vec![0.0], r: 1.0 }).unwrap();
        assert_eq!(step.mean, vec![1.0]);
        assert_eq!(step.cov, vec![0.5]);
        assert_eq!(step.innovation, Some(2.0));
        assert_eq!(step.innovation_var, Some(2.0));
    }

    #[test]
    fn exact_observation_example() {
        for (m, p) in [(0.0, 1.0), (3.3, 0.7), (-12.0, 40.0)] {
            let step = kalman_step(&[m], &[p], Some(7.0), &level_spec(), &Variances { q: vec![0.5], r: 0.0 }).unwrap();
            assert_eq!(step.mean, vec![7.0]);
            assert_eq!(step.cov, vec![0.0]);
        }
    }

    #[test]
    fn gap_example() {
        let v = Variances { q: vec![0.25], r: 1.0 };
        let step = kalman_step(&[4.0], &[1.0], None, &level_spec(), &v).unwrap();
        assert_eq!((step.mean, step.cov, step.innovation), (vec![4.0], vec![1.25], None));
    }

    #[test]
    fn singular_innovation() {
        let err = kalman_step(&[0.0], &[0.0], Some(1.0), &level_spec(), &Variances { q: vec![0.0], r: 0.0 });
        assert!(matches!(err, Err(StateSpaceError::Singular { .. })));
    }

    #[test]
    fn too_short() {
        let s = TimeSeries::from_values(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(
            fit_structural(&s, StructuralKind::LocalLevel).unwrap_err(),
            StateSpaceError::TooShort { needed: 4, got: 3 }
        );
        let s = TimeSeries::from_values(vec![1.0, 2.0, 4.0, 3.0, 5.0]).unwrap();
        assert!(matches!(fit_structural(&s, StructuralKind::LocalTrend), Err(StateSpaceError::TooShort { .. })));
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = TimeSeries::from_values(vec![2.0; 10]).unwrap();
        assert!(matches!(fit_structural(&s, StructuralKind::LocalLevel), Err(StateSpaceError::Degenerate(_))));
    }

    #[test]
    fn trend_forecast_extrapolates_linearly() {
        let s = TimeSeries::from_values(vec![1.0, 3.0, 5.2, 6.9, 9.1, 11.0, 12.8, 15.1]).unwrap();
        let mut fit = filter_structural(&s, StateSpaceSpec::new(StructuralKind::LocalTrend), Variances {
            q: vec![0.1, 0.01],
            r: 0.2,
        })
        .unwrap();
        fit.filtered_states.last_mut().unwrap().mean = vec![10.0, 2.0];
        let fc = forecast_structural(&fit, 3, 0.95).unwrap();
        assert_eq!(fc.mean, vec![12.0, 14.0, 16.0]);
        let hw = fc.half_widths();
        assert!(hw[0] < hw[1] && hw[1] < hw[2]);
    }

    #[test]
    fn control_shifts_forecast() {
        let s = TimeSeries::from_values(vec![1.0, 2.0, 1.5, 2.5, 2.0]).unwrap();
        let spec = StateSpaceSpec {
            kind: StructuralKind::LocalLevel,
            control: Some(ControlInput { matrix: vec![vec![2.0]], signal: vec![] }),
        };
        let fit = filter_structural(&s, spec, Variances { q: vec![0.1], r: 0.5 }).unwrap();
        let base = forecast_structural(&fit, 2, 0.9).unwrap();
        let pushed = forecast_structural_with_control(&fit, 2, 0.9, Some(&[vec![1.0], vec![0.5]])).unwrap();
        assert!((pushed.mean[0] - base.mean[0] - 2.0).abs() < 1e-12);
        assert!((pushed.mean[1] - base.mean[1] - 3.0).abs() < 1e-12);
    }
}

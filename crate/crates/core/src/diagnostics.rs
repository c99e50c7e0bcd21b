//! Residual diagnostics and bootstrap prediction intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arima::{self, ArimaFit};
use crate::series::{self, CalendarPoint, TimeSeries};
use crate::special::{chi_square_sf, normal_quantile, normal_sf};
use crate::statespace::StateSpaceFit;

/// Significance level used by [`diagnose`] unless overridden.
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const MIN_REPLICATES: usize = 100;
pub const MIN_BOOTSTRAP_RESIDUALS: usize = 10;
pub const SHAPIRO_WILK_MAX_N: usize = 5000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("lag {h} invalid for {n} residuals and {fitted_params} fitted parameters")]
    Lag { h: usize, n: usize, fitted_params: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("sample size {0} outside [3, 5000]")]
    Size(usize),
    #[error("at least {MIN_REPLICATES} replicates required, got {0}")]
    Replicates(usize),
    #[error("at least {MIN_BOOTSTRAP_RESIDUALS} residuals required, got {0}")]
    ShortResiduals(usize),
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("level {0} outside (0, 1)")]
    Level(f64),
}

impl DiagnosticsError {
    /// Stable machine-readable code for reports and API payloads.
    pub fn code(&self) -> &'static str {
        match self {
            DiagnosticsError::Lag { .. } => "lag",
            DiagnosticsError::Degenerate(_) => "degenerate",
            DiagnosticsError::Size(_) => "size",
            DiagnosticsError::Replicates(_) => "replicates",
            DiagnosticsError::ShortResiduals(_) => "short_residuals",
            DiagnosticsError::Horizon => "horizon",
            DiagnosticsError::Level(_) => "level",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom for Ljung-Box, sample size for Shapiro-Wilk.
    pub df_or_n: usize,
    pub test_name: String,
}

/// `min(10, n/5)`, but never below `fitted_params + 1`.
pub fn default_lag(n: usize, fitted_params: usize) -> usize {
    (n / 5).min(10).max(fitted_params + 1)
}

/// Ljung-Box portmanteau test on `residuals` up to lag `h`.
pub fn ljung_box(residuals: &TimeSeries, h: usize, fitted_params: usize) -> Result<TestResult, DiagnosticsError> {
    ljung_box_values(residuals.values(), h, fitted_params)
}

pub fn ljung_box_values(residuals: &[f64], h: usize, fitted_params: usize) -> Result<TestResult, DiagnosticsError> {
    let n = residuals.len();
    if h == 0 || h >= n || h <= fitted_params {
        return Err(DiagnosticsError::Lag { h, n, fitted_params });
    }
    let acf = series::acf_values(residuals, h).map_err(|_| DiagnosticsError::Degenerate("zero-variance residuals".into()))?;
    let nf = n as f64;
    let sum: f64 = acf
        .coefficients
        .iter()
        .enumerate()
        .map(|(i, r)| r * r / (nf - (i + 1) as f64))
        .sum();
    let q = nf * (nf + 2.0) * sum;
    let df = h - fitted_params;
    Ok(TestResult {
        statistic: q,
        p_value: chi_square_sf(q, df as f64).clamp(0.0, 1.0),
        df_or_n: df,
        test_name: "Ljung-Box".into(),
    })
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Half of the antisymmetric Shapiro-Wilk coefficient vector (largest
/// first), via Royston's approximation.
fn shapiro_wilk_coefficients(n: usize) -> Vec<f64> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=half).map(|i| normal_quantile((i as f64 - 0.375) / an25)).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let mut a = vec![0.0; half];
    a[0] = a1;
    let (first, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        a[1] = a2;
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        (2, fac)
    } else {
        (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
    };
    for i in first..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// Shapiro-Wilk normality test (Royston's AS R94 approximation).
pub fn shapiro_wilk(sample: &[f64]) -> Result<TestResult, DiagnosticsError> {
    let n = sample.len();
    if !(3..=SHAPIRO_WILK_MAX_N).contains(&n) {
        return Err(DiagnosticsError::Size(n));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::Degenerate("non-finite value".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if !(range > 0.0) {
        return Err(DiagnosticsError::Degenerate("zero variance".into()));
    }
    let result = |w: f64, p: f64| TestResult {
        statistic: w,
        p_value: p.clamp(0.0, 1.0),
        df_or_n: n,
        test_name: "Shapiro-Wilk".into(),
    };

    if n == 3 {
        let mean = (x[0] + x[1] + x[2]) / 3.0;
        let ssq: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
        let w = (0.5 * (x[2] - x[0]) * (x[2] - x[0]) / ssq).min(1.0);
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3);
        return Ok(result(w, p.max(0.0)));
    }

    let a = shapiro_wilk_coefficients(n);
    let coef = |i: usize| -> f64 {
        let j = n - 1 - i;
        match i.cmp(&j) {
            std::cmp::Ordering::Less => -a[i],
            std::cmp::Ordering::Greater => a[j],
            std::cmp::Ordering::Equal => 0.0,
        }
    };
    // Squared correlation between the ordered sample and the coefficients,
    // with 1 - W formed directly to keep precision when W is close to 1.
    let nf = n as f64;
    let sa = (0..n).map(coef).sum::<f64>() / nf;
    let sx = x.iter().map(|v| v / range).sum::<f64>() / nf;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, xi) in x.iter().enumerate() {
        let asa = coef(i) - sa;
        let xsx = xi / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    const G: [f64; 2] = [-2.273, 0.459];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, nf);
        if y >= gamma {
            return Ok(result(w, 1e-99));
        }
        y = -(gamma - y).ln();
        (poly(&C3, nf), poly(&C4, nf).exp())
    } else {
        let lx = nf.ln();
        (poly(&C5, lx), poly(&C6, lx).exp())
    };
    Ok(result(w, normal_sf((y - m) / s)))
}

/// Anything that exposes standardized one-step residuals for diagnosis.
pub trait Residuals {
    fn residual_series(&self) -> &TimeSeries;
    /// Parameters subtracted from the Ljung-Box degrees of freedom.
    fn fitted_params(&self) -> usize;
}

impl Residuals for ArimaFit {
    fn residual_series(&self) -> &TimeSeries {
        &self.residuals
    }
    fn fitted_params(&self) -> usize {
        self.arma_parameter_count()
    }
}

impl Residuals for StateSpaceFit {
    fn residual_series(&self) -> &TimeSeries {
        &self.residuals
    }
    fn fitted_params(&self) -> usize {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportError {
    pub test: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub alpha: f64,
    pub n: usize,
    pub lag: usize,
    pub ljung_box: Option<TestResult>,
    pub shapiro_wilk: Option<TestResult>,
    /// `p > alpha` for each test; false when the test could not run.
    pub ljung_box_pass: bool,
    pub shapiro_wilk_pass: bool,
    /// Tests that failed to run, with the reason.
    pub errors: Vec<ReportError>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.ljung_box_pass && self.shapiro_wilk_pass
    }
}

/// Runs both residual tests at [`DEFAULT_ALPHA`] with the default lag.
pub fn diagnose<F: Residuals + ?Sized>(fit: &F) -> DiagnosticsReport {
    diagnose_with(fit, DEFAULT_ALPHA, None)
}

pub fn diagnose_with<F: Residuals + ?Sized>(fit: &F, alpha: f64, lag: Option<usize>) -> DiagnosticsReport {
    diagnose_values(fit.residual_series().values(), fit.fitted_params(), alpha, lag)
}

/// Diagnoses a raw residual vector. Failures of either test are recorded
/// in the report rather than aborting it.
pub fn diagnose_values(residuals: &[f64], fitted_params: usize, alpha: f64, lag: Option<usize>) -> DiagnosticsReport {
    let n = residuals.len();
    let h = lag.unwrap_or_else(|| default_lag(n, fitted_params));
    let mut errors = Vec::new();
    let mut keep = |name: &str, r: Result<TestResult, DiagnosticsError>| match r {
        Ok(t) => Some(t),
        Err(e) => {
            errors.push(ReportError { test: name.into(), code: e.code().into(), message: e.to_string() });
            None
        }
    };
    let lb = keep("Ljung-Box", ljung_box_values(residuals, h, fitted_params));
    let sw = keep("Shapiro-Wilk", shapiro_wilk(residuals));
    DiagnosticsReport {
        alpha,
        n,
        lag: h,
        ljung_box_pass: lb.as_ref().is_some_and(|t| t.p_value > alpha),
        shapiro_wilk_pass: sw.as_ref().is_some_and(|t| t.p_value > alpha),
        ljung_box: lb,
        shapiro_wilk: sw,
        errors,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapForecast {
    pub horizon: usize,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub replicates: usize,
    pub seed: u64,
    pub unit: String,
    pub start: CalendarPoint,
}

/// Percentile with linear interpolation between order statistics
/// (`h = (n-1)·p`), on an already sorted slice.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let (a, b) = (sorted[lo], sorted[hi]);
    if a == b {
        a
    } else {
        a + (h - lo as f64) * (b - a)
    }
}

/// Residual-resampling bootstrap of future paths. Replicate `b` draws from
/// its own ChaCha stream `b` under `seed`, so results do not depend on the
/// order in which replicates are evaluated.
pub fn bootstrap_forecast(
    fit: &ArimaFit,
    horizon: usize,
    level: f64,
    replicates: usize,
    seed: u64,
) -> Result<BootstrapForecast, DiagnosticsError> {
    if horizon < 1 {
        return Err(DiagnosticsError::Horizon);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(DiagnosticsError::Level(level));
    }
    if replicates < MIN_REPLICATES {
        return Err(DiagnosticsError::Replicates(replicates));
    }
    let res = fit.residuals.values();
    if res.len() < MIN_BOOTSTRAP_RESIDUALS {
        return Err(DiagnosticsError::ShortResiduals(res.len()));
    }
    let centre = res.iter().sum::<f64>() / res.len() as f64;
    let pool: Vec<f64> = res.iter().map(|r| r - centre).collect();
    let point = arima::project(fit, &vec![0.0; horizon]);

    let mut paths = vec![Vec::with_capacity(replicates); horizon];
    let mut shocks = vec![0.0; horizon];
    for b in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        for s in shocks.iter_mut() {
            *s = pool[rng.random_range(0..pool.len())];
        }
        for (h, v) in arima::project(fit, &shocks).into_iter().enumerate() {
            paths[h].push(v);
        }
    }

    let (lo_p, hi_p) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    let mut out = BootstrapForecast {
        horizon,
        mean: Vec::with_capacity(horizon),
        lower: Vec::with_capacity(horizon),
        upper: Vec::with_capacity(horizon),
        level,
        replicates,
        seed,
        unit: fit.history().unit().to_string(),
        start: fit.history().end().advance(1),
    };
    for (h, mut values) in paths.into_iter().enumerate() {
        // Averaging deviations from the point forecast keeps the mean exact
        // when every path coincides with it.
        let x0 = point[h];
        out.mean.push(x0 + values.iter().map(|v| v - x0).sum::<f64>() / replicates as f64);
        values.sort_by(f64::total_cmp);
        out.lower.push(percentile_sorted(&values, lo_p));
        out.upper.push(percentile_sorted(&values, hi_p));
    }
    Ok(out)
}

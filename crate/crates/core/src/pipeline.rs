//! End-to-end forecasting: select a series, fit, diagnose and forecast.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{self, AnalyticsError};
use crate::arima::{auto_arima, forecast_arima, ArimaError, ArimaFit, ArimaSpec, ForecastResult};
use crate::diagnostics::{bootstrap_forecast, diagnose_with, BootstrapForecast, DiagnosticsReport, DEFAULT_ALPHA};
use crate::ingest::{annual_series, to_series, AnnualRecord, IngestError, ProductionRecord, SeriesSelector};
use crate::series::{CalendarPoint, Frequency, TimeSeries};
use crate::statespace::{fit_best_structural, forecast_structural, StateSpaceError, StateSpaceFit, StructuralKind};

pub const ANNUAL_HORIZON: usize = 5;
pub const MONTHLY_HORIZON: usize = 3;
pub const MAX_HORIZON: usize = 120;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("cannot resolve {field}: {message}")]
    Selection { field: String, message: String },
    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("model fitting failed: {0}")]
    Model(String),
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Selection { .. } => "selection",
            PipelineError::TooShort { .. } => "too_short",
            PipelineError::Invalid { .. } => "invalid",
            PipelineError::Model(_) => "model",
        }
    }

    /// Request field the error refers to, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            PipelineError::Selection { field, .. } | PipelineError::Invalid { field, .. } => Some(field),
            _ => None,
        }
    }

    fn invalid(field: &str, message: impl Into<String>) -> Self {
        PipelineError::Invalid { field: field.into(), message: message.into() }
    }
}

impl From<ArimaError> for PipelineError {
    fn from(e: ArimaError) -> Self {
        match e {
            ArimaError::TooShort { needed, got } => PipelineError::TooShort { needed, got },
            other => PipelineError::Model(other.to_string()),
        }
    }
}

impl From<StateSpaceError> for PipelineError {
    fn from(e: StateSpaceError) -> Self {
        match e {
            StateSpaceError::TooShort { needed, got } => PipelineError::TooShort { needed, got },
            other => PipelineError::Model(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ForecastLevel {
    AnnualTotal,
    Mineral,
    Department,
}

impl ForecastLevel {
    pub fn default_horizon(self) -> usize {
        match self {
            ForecastLevel::AnnualTotal => ANNUAL_HORIZON,
            ForecastLevel::Mineral | ForecastLevel::Department => MONTHLY_HORIZON,
        }
    }
}

impl FromStr for ForecastLevel {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "annual" | "annualtotal" => Ok(ForecastLevel::AnnualTotal),
            "mineral" => Ok(ForecastLevel::Mineral),
            "department" => Ok(ForecastLevel::Department),
            _ => Err(PipelineError::invalid("level", format!("unknown level {s:?} (annual, mineral, department)"))),
        }
    }
}

impl fmt::Display for ForecastLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ModelChoice {
    #[default]
    AutoArima,
    StateSpace,
    Best,
}

impl FromStr for ModelChoice {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "arima" | "autoarima" => Ok(ModelChoice::AutoArima),
            "statespace" | "structural" => Ok(ModelChoice::StateSpace),
            "best" => Ok(ModelChoice::Best),
            _ => Err(PipelineError::invalid("model", format!("unknown model {s:?} (arima, statespace, best)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRequest {
    pub level: ForecastLevel,
    /// Mineral name for the annual and mineral levels, department name for
    /// the department level.
    pub target: String,
    /// Restricts a department forecast to one mineral. Without it the
    /// department's top mineral is used.
    #[serde(default)]
    pub mineral: Option<String>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub model: ModelChoice,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl ForecastRequest {
    pub fn new(level: ForecastLevel, target: impl Into<String>) -> Self {
        Self {
            level,
            target: target.into(),
            mineral: None,
            horizon: None,
            model: ModelChoice::default(),
            confidence: DEFAULT_CONFIDENCE,
            seed: DEFAULT_SEED,
        }
    }

    pub fn resolved_horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| self.level.default_horizon())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.target.trim().is_empty() {
            return Err(PipelineError::invalid("target", "must not be empty"));
        }
        if let Some(h) = self.horizon {
            if !(1..=MAX_HORIZON).contains(&h) {
                return Err(PipelineError::invalid("horizon", format!("must be between 1 and {MAX_HORIZON}")));
            }
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(PipelineError::invalid("confidence", "must lie strictly between 0 and 1"));
        }
        Ok(())
    }
}

/// Tuning that is not part of a request: significance level for the
/// diagnostics flags and bootstrap size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    pub alpha: f64,
    pub replicates: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA, replicates: DEFAULT_REPLICATES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub label: String,
    pub n: usize,
    pub start: CalendarPoint,
    pub end: CalendarPoint,
    pub frequency: Frequency,
    pub unit: String,
    pub values: Vec<f64>,
}

impl SeriesSummary {
    fn of(series: &TimeSeries, label: String) -> Self {
        Self {
            label,
            n: series.len(),
            start: series.start(),
            end: series.end(),
            frequency: series.frequency(),
            unit: series.unit().to_string(),
            values: series.values().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelFamily {
    Arima,
    StateSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub family: ModelFamily,
    /// `ARIMA(p,d,q)`, `LocalLevel` or `LocalTrend`.
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<ArimaSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structural_kind: Option<StructuralKind>,
    /// `c`, then φ, then θ for ARIMA; empty for state-space fits.
    pub coefficients: Vec<f64>,
    /// σ² for ARIMA; process variances then observation variance otherwise.
    pub variances: Vec<f64>,
    pub loglik: f64,
    pub aic: f64,
}

impl FitSummary {
    fn arima(fit: &ArimaFit) -> Self {
        let s = fit.spec;
        let mut coefficients = vec![fit.c];
        coefficients.extend(&fit.phi);
        coefficients.extend(&fit.theta);
        Self {
            family: ModelFamily::Arima,
            model: format!("ARIMA({},{},{})", s.p, s.d, s.q),
            order: Some(s),
            structural_kind: None,
            coefficients,
            variances: vec![fit.sigma2],
            loglik: fit.loglik,
            aic: fit.aic,
        }
    }

    fn structural(fit: &StateSpaceFit) -> Self {
        let mut variances = fit.q_variances.clone();
        variances.push(fit.r_variance);
        Self {
            family: ModelFamily::StateSpace,
            model: format!("{:?}", fit.kind()),
            order: None,
            structural_kind: Some(fit.kind()),
            coefficients: Vec::new(),
            variances,
            loglik: fit.loglik,
            aic: fit.aic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub request: ForecastRequest,
    pub horizon: usize,
    pub series_used: SeriesSummary,
    pub fit: FitSummary,
    pub diagnostics: DiagnosticsReport,
    pub forecast: ForecastResult,
    pub bootstrap: Option<BootstrapForecast>,
    /// Decisions taken while serving the request.
    pub notes: Vec<String>,
}

/// A resolved series and how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSeries {
    pub series: TimeSeries,
    pub label: String,
    pub notes: Vec<String>,
}

fn selection(field: &str, e: impl fmt::Display) -> PipelineError {
    PipelineError::Selection { field: field.into(), message: e.to_string() }
}

/// Builds the series a request refers to.
pub fn resolve_series(
    request: &ForecastRequest,
    monthly: &[ProductionRecord],
    annual: &[AnnualRecord],
) -> Result<ResolvedSeries, PipelineError> {
    let mut notes = Vec::new();
    let (series, label) = match request.level {
        ForecastLevel::AnnualTotal => {
            let (s, report) = annual_series(annual, &request.target).map_err(|e| match e {
                IngestError::EmptySelection => selection("target", format!("no annual column for {:?}", request.target)),
                other => selection("target", other),
            })?;
            notes.extend(report.messages.into_iter().map(|m| m.action));
            (s, format!("annual {}", request.target.to_uppercase()))
        }
        ForecastLevel::Mineral => {
            let sel = SeriesSelector { mineral: Some(request.target.clone()), department: None };
            let (s, report) = to_series(monthly, &sel).map_err(|e| selection("target", e))?;
            notes.extend(report.messages.into_iter().map(|m| m.action));
            (s, format!("monthly {}", crate::ingest::normalize_key(&request.target)))
        }
        ForecastLevel::Department => {
            let mineral = match &request.mineral {
                Some(m) => m.clone(),
                None => {
                    let stats = analytics::department_stats(monthly, &request.target).map_err(|e| match e {
                        AnalyticsError::UnknownDepartment(d) => selection("target", format!("unknown department {d:?}")),
                        other => selection("target", other),
                    })?;
                    notes.push(format!("no mineral given; using the department's top mineral {}", stats.top_mineral));
                    stats.top_mineral
                }
            };
            let sel = SeriesSelector { mineral: Some(mineral.clone()), department: Some(request.target.clone()) };
            let (s, report) = to_series(monthly, &sel).map_err(|e| selection("mineral", e))?;
            notes.extend(report.messages.into_iter().map(|m| m.action));
            let key = crate::ingest::normalize_key;
            (s, format!("monthly {} in {}", key(&mineral), key(&request.target)))
        }
    };
    Ok(ResolvedSeries { series, label, notes })
}

enum Fitted {
    Arima(Box<ArimaFit>),
    Structural(Box<StateSpaceFit>),
}

fn fit_model(series: &TimeSeries, choice: ModelChoice, notes: &mut Vec<String>) -> Result<Fitted, PipelineError> {
    match choice {
        ModelChoice::AutoArima => Ok(Fitted::Arima(Box::new(auto_arima(series)?))),
        ModelChoice::StateSpace => Ok(Fitted::Structural(Box::new(fit_best_structural(series)?))),
        ModelChoice::Best => {
            let arima = auto_arima(series)?;
            if arima.spec.d != 0 {
                notes.push(format!(
                    "best: ARIMA selected d={}, so its likelihood is on the differenced scale and cannot be compared with the state-space fit; kept ARIMA",
                    arima.spec.d
                ));
                return Ok(Fitted::Arima(Box::new(arima)));
            }
            match fit_best_structural(series) {
                Ok(ss) if ss.aic < arima.aic => {
                    notes.push(format!("best: {:?} AIC {:.3} below ARIMA AIC {:.3}", ss.kind(), ss.aic, arima.aic));
                    Ok(Fitted::Structural(Box::new(ss)))
                }
                Ok(ss) => {
                    notes.push(format!("best: ARIMA AIC {:.3} not above {:?} AIC {:.3}", arima.aic, ss.kind(), ss.aic));
                    Ok(Fitted::Arima(Box::new(arima)))
                }
                Err(e) => {
                    notes.push(format!("best: state-space fit failed ({e}); kept ARIMA"));
                    Ok(Fitted::Arima(Box::new(arima)))
                }
            }
        }
    }
}

pub fn run_forecast(
    request: &ForecastRequest,
    monthly: &[ProductionRecord],
    annual: &[AnnualRecord],
) -> Result<PipelineResult, PipelineError> {
    run_forecast_with(request, monthly, annual, PipelineOptions::default())
}

/// Resolves the series, fits the requested model family, attaches
/// diagnostics and forecasts. ARIMA fits also get a residual bootstrap.
pub fn run_forecast_with(
    request: &ForecastRequest,
    monthly: &[ProductionRecord],
    annual: &[AnnualRecord],
    options: PipelineOptions,
) -> Result<PipelineResult, PipelineError> {
    request.validate()?;
    let horizon = request.resolved_horizon();
    let ResolvedSeries { series, label, mut notes } = resolve_series(request, monthly, annual)?;
    let fitted = fit_model(&series, request.model, &mut notes)?;
    let (fit, diagnostics, forecast, bootstrap) = match &fitted {
        Fitted::Arima(fit) => {
            let forecast = forecast_arima(fit, horizon, request.confidence)?;
            let bootstrap = match bootstrap_forecast(fit, horizon, request.confidence, options.replicates, request.seed) {
                Ok(b) => Some(b),
                Err(e) => {
                    notes.push(format!("bootstrap skipped: {e}"));
                    None
                }
            };
            (FitSummary::arima(fit), diagnose_with(fit.as_ref(), options.alpha, None), forecast, bootstrap)
        }
        Fitted::Structural(fit) => {
            let forecast = forecast_structural(fit, horizon, request.confidence)?;
            (FitSummary::structural(fit), diagnose_with(fit.as_ref(), options.alpha, None), forecast, None)
        }
    };
    Ok(PipelineResult {
        request: request.clone(),
        horizon,
        series_used: SeriesSummary::of(&series, label),
        fit,
        diagnostics,
        forecast,
        bootstrap,
        notes,
    })
}

/// Fit and diagnostics without forecasting, for residual inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsResult {
    pub request: ForecastRequest,
    pub series_used: SeriesSummary,
    pub fit: FitSummary,
    pub diagnostics: DiagnosticsReport,
    pub residuals: Vec<f64>,
    pub notes: Vec<String>,
}

pub fn run_diagnostics(
    request: &ForecastRequest,
    monthly: &[ProductionRecord],
    annual: &[AnnualRecord],
    options: PipelineOptions,
) -> Result<DiagnosticsResult, PipelineError> {
    request.validate()?;
    let ResolvedSeries { series, label, mut notes } = resolve_series(request, monthly, annual)?;
    let fitted = fit_model(&series, request.model, &mut notes)?;
    let (fit, diagnostics, residuals) = match &fitted {
        Fitted::Arima(f) => {
            (FitSummary::arima(f), diagnose_with(f.as_ref(), options.alpha, None), f.residuals.values().to_vec())
        }
        Fitted::Structural(f) => {
            (FitSummary::structural(f), diagnose_with(f.as_ref(), options.alpha, None), f.residuals.values().to_vec())
        }
    };
    Ok(DiagnosticsResult { request: request.clone(), series_used: SeriesSummary::of(&series, label), fit, diagnostics, residuals, notes })
}

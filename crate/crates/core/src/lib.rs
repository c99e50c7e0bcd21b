//! Mining production analytics and forecasting.
//!
//! The crate ingests monthly and annual production tables, turns them into
//! [`TimeSeries`], fits ARIMA and structural state-space models, validates
//! fits with residual diagnostics and assembles chart-ready aggregates.
//!
//! Runnable walkthroughs for each capability live in this crate's
//! `examples/` directory.

pub mod analytics;
pub mod arima;
pub mod diagnostics;
pub mod ingest;
mod kalman;
pub mod optim;
pub mod pipeline;
pub mod series;
pub mod special;
pub mod statespace;

pub use arima::{
    auto_arima, fit_arima, forecast_arima, select_differencing, simulate_arima, ArimaError, ArimaFit, ArimaParams, ArimaSpec,
    ForecastResult,
};
pub use series::{acf, difference, inverse_difference, znormalize, AcfResult, CalendarPoint, Frequency, SeriesError, TimeSeries};
pub use statespace::{
    filter_structural, fit_best_structural, fit_structural, forecast_structural, kalman_step, StateSpaceError,
    StateSpaceFit, StateSpaceSpec, StructuralKind, Variances,
};
pub use diagnostics::{
    bootstrap_forecast, diagnose, ljung_box, shapiro_wilk, BootstrapForecast, DiagnosticsError, DiagnosticsReport,
    TestResult,
};
pub use ingest::{
    clean_monthly, knn_impute, normalize_names, parse_annual, parse_monthly, to_series, AnnualRecord, CleaningReport, IngestError,
    ProductionRecord, SeriesSelector,
};
pub use analytics::{
    aggregate, department_stats, frequency_polygon, pie, AnalyticsError, ChartKind, ChartSeries, DepartmentStats,
    GroupBy,
};
pub use pipeline::{
    run_diagnostics, run_forecast, run_forecast_with, ForecastLevel, ForecastRequest, ModelChoice, PipelineError,
    PipelineOptions, PipelineResult,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use minecast::pipeline::{run_diagnostics, run_forecast_with, ForecastRequest};
use serde::Serialize;
use serde_json::json;

use crate::charts::build_chart;
use crate::error::ApiError;
use crate::query::{parse_chart, parse_forecast, ChartType, Params};
use crate::state::AppState;

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/departments", get(departments))
        .route("/api/departments/{name}/stats", get(department_stats))
        .route("/api/minerals", get(minerals))
        .route("/api/charts/{kind}", get(chart))
        .route("/api/forecast", get(forecast))
        .route("/api/diagnostics", get(diagnostics))
        .route("/api/geo", get(geo))
        .fallback(not_found)
        .with_state(state)
}

fn params(query: Result<Query<Params>, QueryRejection>) -> ApiResult<Params> {
    query.map(|Query(p)| p).map_err(|e| ApiError::bad_request("invalid_query", e.body_text(), "query"))
}

fn json_body(body: Arc<str>) -> Response {
    ([(CONTENT_TYPE, "application/json")], body.to_string()).into_response()
}

async fn not_found() -> ApiError {
    ApiError::not_found("not_found", "no such endpoint", None)
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn departments(State(state): State<Shared>) -> Json<Vec<String>> {
    Json(state.departments())
}

async fn department_stats(State(state): State<Shared>, Path(name): Path<String>) -> ApiResult<Json<minecast::DepartmentStats>> {
    Ok(Json(minecast::department_stats(state.monthly(), &name)?))
}

#[derive(Serialize)]
struct AnnualColumn {
    mineral: String,
    unit: String,
}

#[derive(Serialize)]
struct MineralCatalog {
    /// Monthly-table minerals with the units each is reported in.
    monthly: BTreeMap<String, Vec<String>>,
    annual: Vec<AnnualColumn>,
}

async fn minerals(State(state): State<Shared>) -> Json<MineralCatalog> {
    let annual = minecast::ingest::annual_minerals(state.annual())
        .into_iter()
        .map(|(mineral, unit)| AnnualColumn { mineral, unit })
        .collect();
    Json(MineralCatalog { monthly: minecast::analytics::minerals(state.monthly()), annual })
}

async fn chart(
    State(state): State<Shared>,
    Path(kind): Path<String>,
    query: Result<Query<Params>, QueryRejection>,
) -> ApiResult<Json<Vec<minecast::ChartSeries>>> {
    let kind: ChartType = kind.parse()?;
    let q = parse_chart(&params(query)?)?;
    Ok(Json(build_chart(kind, &q, state.monthly())?))
}

/// Serves a cached body or computes one off the async runtime.
async fn cached<F>(state: Shared, key: String, compute: F) -> ApiResult<Response>
where
    F: FnOnce(&AppState) -> ApiResult<String> + Send + 'static,
{
    if let Some(body) = state.cached(&key) {
        return Ok(json_body(body));
    }
    let worker = state.clone();
    let body: Arc<str> = tokio::task::spawn_blocking(move || compute(&worker))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??
        .into();
    state.store(key, body.clone());
    Ok(json_body(body))
}

fn cache_key(endpoint: &str, request: &ForecastRequest) -> String {
    format!("{endpoint}:{}", serde_json::to_string(request).expect("request serializes"))
}

fn to_json<T: Serialize>(value: &T) -> ApiResult<String> {
    serde_json::to_string(value).map_err(|e| ApiError::internal(e.to_string()))
}

async fn forecast(State(state): State<Shared>, query: Result<Query<Params>, QueryRejection>) -> ApiResult<Response> {
    let request = parse_forecast(&params(query)?)?;
    let key = cache_key("forecast", &request);
    cached(state, key, move |s| {
        let result = run_forecast_with(&request, s.monthly(), s.annual(), s.options())?;
        to_json(&result)
    })
    .await
}

async fn diagnostics(State(state): State<Shared>, query: Result<Query<Params>, QueryRejection>) -> ApiResult<Response> {
    let request = parse_forecast(&params(query)?)?;
    let key = cache_key("diagnostics", &request);
    cached(state, key, move |s| {
        let result = run_diagnostics(&request, s.monthly(), s.annual(), s.options())?;
        to_json(&result)
    })
    .await
}

async fn geo(State(state): State<Shared>) -> ApiResult<Json<serde_json::Value>> {
    let geo = state
        .geo()
        .ok_or_else(|| ApiError::not_found("no_geo", "the service was started without department boundaries", None))?;
    Ok(Json(geo.to_geojson()))
}

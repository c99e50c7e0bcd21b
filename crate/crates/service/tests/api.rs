use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use minecast::ingest::DEFAULT_K;
use minecast::pipeline::PipelineOptions;
use minecast_service::{router, AppState, DataPaths, Datasets, GeoCollection};
use serde_json::Value;
use tower::ServiceExt;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn paths() -> DataPaths {
    let data = root().join("../../data");
    DataPaths {
        monthly: data.join("produccion_mensual_2020_2022.csv"),
        annual: data.join("produccion_anual_1980_2022.csv"),
        geo: Some(data.join("departamentos.geojson")),
    }
}

fn datasets() -> &'static (Datasets, GeoCollection) {
    static D: OnceLock<(Datasets, GeoCollection)> = OnceLock::new();
    D.get_or_init(|| {
        let p = paths();
        let data = Datasets::load(&p.monthly, &p.annual, DEFAULT_K).unwrap();
        let geo = GeoCollection::load(p.geo.as_deref().unwrap()).unwrap();
        (data, geo)
    })
}

fn state_with_cache(cache: usize) -> Arc<AppState> {
    let (data, geo) = datasets();
    Arc::new(AppState::new(data.clone(), Some(geo.clone()), PipelineOptions::default(), cache))
}

fn app() -> Router {
    static S: OnceLock<Arc<AppState>> = OnceLock::new();
    router(S.get_or_init(|| state_with_cache(256)).clone())
}

async fn get_raw(app: Router, uri: &str) -> (StatusCode, String) {
    let res = app.oneshot(Request::get(uri).body(Body::empty()).unwrap()).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn get(uri: &str) -> (StatusCode, Value) {
    let (status, body) = get_raw(app(), uri).await;
    let value = serde_json::from_str(&body).unwrap_or_else(|e| panic!("{uri}: body is not JSON ({e}): {body}"));
    (status, value)
}

fn assert_schema(name: &str, value: &Value) {
    let path = root().join("schemas").join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name} schema violations: {errors:#?}");
}

fn assert_error(status: StatusCode, body: &Value, expected: StatusCode, code: &str, field: Option<&str>) {
    assert_eq!(status, expected, "{body}");
    assert_schema("error", body);
    assert_eq!(body["code"], code, "{body}");
    if let Some(f) = field {
        assert_eq!(body["field"], f, "{body}");
    }
}

#[tokio::test]
async fn health_is_ok() {
    let (status, body) = get("/api/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("health", &body);
}

#[tokio::test]
async fn twenty_five_departments_matching_the_map() {
    let (status, body) = get("/api/departments").await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("departments", &body);
    let names: Vec<&str> = body.as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(names.len(), 25);
    assert!(names.contains(&"CALLAO") && names.contains(&"LORETO"));

    let (_, geo) = get("/api/geo").await;
    assert_schema("geo", &geo);
    let features = geo["features"].as_array().unwrap();
    assert_eq!(features.len(), names.len());
    for f in features {
        assert!(names.contains(&f["properties"]["NOMBDEP"].as_str().unwrap()));
    }
}

#[tokio::test]
async fn department_stats_for_every_producing_department() {
    let (_, body) = get("/api/departments").await;
    let mut producing = 0;
    for name in body.as_array().unwrap() {
        let name = name.as_str().unwrap();
        let (status, stats) = get(&format!("/api/departments/{}/stats", name.replace(' ', "%20"))).await;
        if name == "LORETO" {
            assert_error(status, &stats, StatusCode::NOT_FOUND, "unknown_department", Some("name"));
            continue;
        }
        assert_eq!(status, StatusCode::OK, "{name}: {stats}");
        assert_schema("department_stats", &stats);
        assert_eq!(stats["department"], name);
        producing += 1;
    }
    assert_eq!(producing, 24);

    let (status, stats) = get("/api/departments/Jun%C3%ADn/stats").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(stats["department"], "JUNIN");
}

#[tokio::test]
async fn minerals_catalog() {
    let (status, body) = get("/api/minerals").await;
    assert_eq!(status, StatusCode::OK);
    assert_schema("minerals", &body);
    assert_eq!(body["monthly"]["ORO"][0], "Gr. finos");
    assert_eq!(body["annual"].as_array().unwrap().len(), 8);
}

#[tokio::test]
async fn charts_validate_and_add_up() {
    let (data, _) = datasets();
    for uri in [
        "/api/charts/bar",
        "/api/charts/bar?group_by=department&mineral=COBRE",
        "/api/charts/bar?group_by=year&mineral=oro",
        "/api/charts/pie?group_by=stratum",
        "/api/charts/pie?group_by=department&mineral=ZINC&threshold=2.5",
        "/api/charts/polygon?mineral=COBRE",
        "/api/charts/polygon?mineral=PLATA&bins=6&year=2021",
    ] {
        let (status, body) = get(uri).await;
        assert_eq!(status, StatusCode::OK, "{uri}: {body}");
        assert_schema("charts", &body);
        for series in body.as_array().unwrap() {
            let values: Vec<f64> = series["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
            assert_eq!(values.len(), series["labels"].as_array().unwrap().len());
            if uri.contains("/pie") {
                assert!((values.iter().sum::<f64>() - 100.0).abs() < 1e-9, "{uri}");
            }
        }
    }

    let (_, body) = get("/api/charts/bar?group_by=department&mineral=COBRE").await;
    let api_total: f64 = body[0]["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    let direct: f64 = data.monthly.iter().filter(|r| r.mineral == "COBRE").map(|r| r.total.unwrap()).sum();
    assert!((api_total - direct).abs() <= 1e-9 * direct);

    let (_, body) = get("/api/charts/polygon?mineral=COBRE&bins=5").await;
    let counts: Vec<f64> = body[0]["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(counts.len(), 7);
    assert_eq!((counts[0], counts[6]), (0.0, 0.0));
    let cobre_rows = data.monthly.iter().filter(|r| r.mineral == "COBRE").count();
    assert_eq!(counts.iter().sum::<f64>() as usize, cobre_rows);
}

#[tokio::test]
async fn chart_errors_are_structured() {
    let (s, b) = get("/api/charts/bar?group_by=colour").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "invalid_parameter", Some("group_by"));
    let (s, b) = get("/api/charts/donut").await;
    assert_error(s, &b, StatusCode::NOT_FOUND, "unknown_chart", Some("kind"));
    let (s, b) = get("/api/charts/polygon").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "mixed_unit", Some("mineral"));
    let (s, b) = get("/api/charts/bar?mineral=URANIO").await;
    assert_error(s, &b, StatusCode::NOT_FOUND, "empty_selection", Some("mineral"));
    let (s, b) = get("/api/charts/polygon?mineral=COBRE&bins=0").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "invalid_parameter", Some("bins"));
    let (s, b) = get("/api/charts/bar?year=last").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "invalid_parameter", Some("year"));
    let (s, b) = get("/api/charts/bar?colour=red").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "unknown_parameter", Some("colour"));
}

#[tokio::test]
async fn forecast_follows_horizon_rules() {
    let (status, body) = get("/api/forecast?level=annual&target=COBRE").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_schema("forecast", &body);
    assert_eq!(body["forecast"]["mean"].as_array().unwrap().len(), 5);
    assert_eq!(body["forecast"]["unit"], "TMF");
    assert_eq!(body["forecast"]["start"]["year"], 2023);

    let (status, body) = get("/api/forecast?level=Mineral&target=ORO").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_schema("forecast", &body);
    assert_eq!(body["forecast"]["mean"].as_array().unwrap().len(), 3);
    assert_eq!(body["forecast"]["unit"], "Gr. finos");

    let (status, body) = get("/api/forecast?level=department&target=PUNO&model=best&confidence=0.8").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_schema("forecast", &body);
    assert_eq!(body["forecast"]["mean"].as_array().unwrap().len(), 3);
    assert_eq!(body["forecast"]["level"], 0.8);

    let (status, body) = get("/api/forecast?level=annual&target=PLOMO&model=statespace&horizon=2").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_schema("forecast", &body);
    assert_eq!(body["fit"]["family"], "StateSpace");
    assert_eq!(body["forecast"]["horizon"], 2);
}

#[tokio::test]
async fn forecast_errors_are_structured() {
    let (s, b) = get("/api/forecast?level=Mineral").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "missing_parameter", Some("target"));
    let (s, b) = get("/api/forecast?target=COBRE").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "missing_parameter", Some("level"));
    let (s, b) = get("/api/forecast?level=province&target=COBRE").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "invalid_parameter", Some("level"));
    let (s, b) = get("/api/forecast?level=annual&target=COBRE&horizon=-1").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "invalid_parameter", Some("horizon"));
    let (s, b) = get("/api/forecast?level=annual&target=COBRE&horizon=0").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "invalid_parameter", Some("horizon"));
    let (s, b) = get("/api/forecast?level=annual&target=COBRE&confidence=95").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "invalid_parameter", Some("confidence"));
    let (s, b) = get("/api/forecast?level=annual&target=COBRE&model=prophet").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "invalid_parameter", Some("model"));
    let (s, b) = get("/api/forecast?level=annual&target=URANIO").await;
    assert_error(s, &b, StatusCode::NOT_FOUND, "selection", Some("target"));
    let (s, b) = get("/api/forecast?level=department&target=LORETO").await;
    assert_error(s, &b, StatusCode::NOT_FOUND, "selection", Some("target"));
}

#[tokio::test]
async fn identical_requests_return_identical_bytes() {
    let uri = "/api/forecast?level=annual&target=ZINC&model=best";
    let fresh = state_with_cache(0);
    let (_, uncached) = get_raw(router(fresh.clone()), uri).await;
    let (_, again) = get_raw(router(fresh), uri).await;
    assert_eq!(uncached, again);

    let cached = state_with_cache(8);
    let (_, first) = get_raw(router(cached.clone()), uri).await;
    assert_eq!(cached.cache_len(), 1);
    let (_, second) = get_raw(router(cached.clone()), uri).await;
    assert_eq!(first, uncached);
    assert_eq!(first, second);
}

#[tokio::test]
async fn concurrent_requests_agree() {
    let state = state_with_cache(4);
    let uri = "/api/forecast?level=Mineral&target=COBRE";
    let tasks: Vec<_> = (0..8)
        .map(|_| {
            let app = router(state.clone());
            tokio::spawn(async move { get_raw(app, uri).await })
        })
        .collect();
    let mut bodies = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        bodies.push(body);
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn cache_evicts_least_recently_used() {
    let state = state_with_cache(2);
    for target in ["COBRE", "ZINC", "PLOMO"] {
        let (status, _) = get_raw(router(state.clone()), &format!("/api/forecast?level=annual&target={target}&model=statespace")).await;
        assert_eq!(status, StatusCode::OK);
    }
    assert_eq!(state.cache_len(), 2);
}

#[tokio::test]
async fn diagnostics_endpoint() {
    let (status, body) = get("/api/diagnostics?level=annual&target=COBRE").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_schema("diagnostics", &body);
    assert!(body["diagnostics"]["ljung_box"]["p_value"].is_number());

    let (s, b) = get("/api/diagnostics?level=annual").await;
    assert_error(s, &b, StatusCode::BAD_REQUEST, "missing_parameter", Some("target"));
}

#[tokio::test]
async fn unknown_routes_are_json_404s() {
    let (s, b) = get("/api/nothing").await;
    assert_error(s, &b, StatusCode::NOT_FOUND, "not_found", None);
}

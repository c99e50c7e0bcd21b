use std::fs::File;
use std::path::PathBuf;
use std::sync::OnceLock;

use minecast::ingest::{clean_monthly, parse_annual, FormatOptions, DEFAULT_K};
use minecast::pipeline::{ForecastLevel, ForecastRequest, ModelChoice, ModelFamily, PipelineError};
use minecast::{run_forecast, AnnualRecord, CalendarPoint, ProductionRecord};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

struct Fixture {
    monthly: Vec<ProductionRecord>,
    annual: Vec<AnnualRecord>,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let file = File::open(data_dir().join("produccion_mensual_2020_2022.csv")).unwrap();
        let (monthly, _) = clean_monthly(file, FormatOptions::default(), DEFAULT_K).unwrap();
        let annual = parse_annual(File::open(data_dir().join("produccion_anual_1980_2022.csv")).unwrap()).unwrap();
        Fixture { monthly, annual }
    })
}

fn run(req: &ForecastRequest) -> Result<minecast::PipelineResult, PipelineError> {
    let f = fixture();
    run_forecast(req, &f.monthly, &f.annual)
}

#[test]
fn fixture_cleans_without_dropping_rows() {
    let file = File::open(data_dir().join("produccion_mensual_2020_2022.csv")).unwrap();
    let (records, report) = clean_monthly(file, FormatOptions::default(), DEFAULT_K).unwrap();
    assert_eq!(report.rows_read, 2151);
    assert_eq!(report.rows_dropped, 0);
    assert_eq!(records.len(), 2151);
    assert!(report.values_imputed > 0);
    assert!(report.names_corrected > 0);
    for r in &records {
        assert!(!r.has_gaps());
        let sum = r.month_sum();
        assert!((r.total.unwrap() - sum).abs() <= 1e-6 * sum.abs());
    }
}

#[test]
fn annual_copper_forecasts_five_years_in_tmf() {
    let res = run(&ForecastRequest::new(ForecastLevel::AnnualTotal, "COBRE")).unwrap();
    assert_eq!(res.horizon, 5);
    assert_eq!(res.forecast.horizon, 5);
    assert_eq!(res.forecast.mean.len(), 5);
    assert_eq!(res.forecast.unit, "TMF");
    assert_eq!(res.series_used.unit, "TMF");
    assert_eq!(res.series_used.n, 43);
    assert_eq!(res.forecast.start, CalendarPoint::year(2023));
    assert!(res.bootstrap.as_ref().is_some_and(|b| b.mean.len() == 5));
    for i in 0..5 {
        assert!(res.forecast.lower[i] <= res.forecast.mean[i] && res.forecast.mean[i] <= res.forecast.upper[i]);
    }
}

#[test]
fn monthly_gold_forecasts_three_months() {
    let res = run(&ForecastRequest::new(ForecastLevel::Mineral, "oro")).unwrap();
    assert_eq!(res.series_used.n, 36);
    assert_eq!(res.forecast.mean.len(), 3);
    assert_eq!(res.forecast.unit, "Gr. finos");
    assert_eq!(res.forecast.start, CalendarPoint::month(2023, 1));
}

#[test]
fn department_defaults_to_its_top_mineral() {
    let res = run(&ForecastRequest::new(ForecastLevel::Department, "Puno")).unwrap();
    assert_eq!(res.forecast.mean.len(), 3);
    assert!(res.notes.iter().any(|n| n.contains("top mineral")), "{:?}", res.notes);
    assert_eq!(res.forecast.unit, res.series_used.unit);

    let mut req = ForecastRequest::new(ForecastLevel::Department, "PUNO");
    req.mineral = Some("ORO".into());
    let res = run(&req).unwrap();
    assert_eq!(res.series_used.unit, "Gr. finos");
}

#[test]
fn explicit_horizon_is_respected() {
    let mut req = ForecastRequest::new(ForecastLevel::Mineral, "COBRE");
    req.horizon = Some(7);
    let res = run(&req).unwrap();
    assert_eq!((res.horizon, res.forecast.mean.len()), (7, 7));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for req in [
        ForecastRequest::new(ForecastLevel::AnnualTotal, "ZINC"),
        ForecastRequest::new(ForecastLevel::Department, "AREQUIPA"),
        ForecastRequest { model: ModelChoice::Best, ..ForecastRequest::new(ForecastLevel::Mineral, "PLATA") },
    ] {
        let a = serde_json::to_string(&run(&req).unwrap()).unwrap();
        let b = serde_json::to_string(&run(&req).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn unresolvable_targets_are_selection_errors() {
    let err = run(&ForecastRequest::new(ForecastLevel::Department, "LORETO")).unwrap_err();
    assert!(matches!(err, PipelineError::Selection { .. }), "{err:?}");
    let err = run(&ForecastRequest::new(ForecastLevel::AnnualTotal, "URANIO")).unwrap_err();
    assert!(matches!(err, PipelineError::Selection { .. }), "{err:?}");
    let err = run(&ForecastRequest::new(ForecastLevel::Mineral, "URANIO")).unwrap_err();
    assert_eq!(err.field(), Some("target"));
}

#[test]
fn four_monthly_points_are_too_short() {
    let base = &fixture().monthly[0];
    let mut r = base.clone();
    r.department = "TUMBES".into();
    r.year = 2022;
    r.months = [None; 12];
    for m in 0..4 {
        r.months[m] = Some(10.0 + m as f64);
    }
    let req = ForecastRequest { mineral: Some(r.mineral.clone()), ..ForecastRequest::new(ForecastLevel::Department, "TUMBES") };
    let err = run_forecast(&req, &[r], &[]).unwrap_err();
    match err {
        PipelineError::TooShort { needed, got } => {
            assert_eq!(got, 4);
            assert!(needed > 4);
        }
        other => panic!("expected TooShort, got {other:?}"),
    }
}

#[test]
fn state_space_requests_use_structural_models() {
    let req = ForecastRequest { model: ModelChoice::StateSpace, ..ForecastRequest::new(ForecastLevel::AnnualTotal, "PLOMO") };
    let res = run(&req).unwrap();
    assert_eq!(res.fit.family, ModelFamily::StateSpace);
    assert!(res.bootstrap.is_none());
    assert_eq!(res.forecast.mean.len(), 5);
    assert_eq!(res.diagnostics.n, 43 - res.fit.structural_kind.unwrap().state_dim());
}

#[test]
fn best_only_compares_undifferenced_fits() {
    for target in ["COBRE", "ORO", "ZINC", "PLATA", "PLOMO", "ESTAÑO", "MOLIBDENO", "CADMIO"] {
        let req = ForecastRequest { model: ModelChoice::Best, ..ForecastRequest::new(ForecastLevel::AnnualTotal, target) };
        let res = run(&req).unwrap();
        let note = res.notes.iter().find(|n| n.starts_with("best:")).expect("best note");
        if note.contains("differenced scale") {
            assert_eq!(res.fit.family, ModelFamily::Arima);
            assert!(res.fit.order.unwrap().d > 0);
        }
    }
}

#[test]
fn result_json_has_documented_fields() {
    let res = run(&ForecastRequest::new(ForecastLevel::AnnualTotal, "COBRE")).unwrap();
    let v = serde_json::to_value(&res).unwrap();
    for key in ["request", "horizon", "series_used", "fit", "diagnostics", "forecast", "bootstrap", "notes"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    for key in ["horizon", "mean", "lower", "upper", "level", "unit", "start"] {
        assert!(v["forecast"].get(key).is_some(), "missing forecast.{key}");
    }
    assert_eq!(v["request"]["level"], "AnnualTotal");
}

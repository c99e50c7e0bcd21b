use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn minecast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minecast"))
        .args(args)
        .current_dir(workspace())
        .env("RUST_LOG", "warn")
        .env_remove("MINECAST_MONTHLY")
        .env_remove("MINECAST_ANNUAL")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

#[test]
fn forecast_prints_pipeline_json() {
    let out = minecast(&["forecast", "--level", "annual", "--target", "COBRE", "--horizon", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["forecast"]["mean"].as_array().unwrap().len(), 5);
    assert_eq!(v["forecast"]["unit"], "TMF");
    assert_eq!(v["request"]["level"], "AnnualTotal");
}

#[test]
fn forecast_output_is_reproducible() {
    let args = ["forecast", "--level", "department", "--target", "AREQUIPA", "--model", "best"];
    let a = minecast(&args);
    let b = minecast(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout_json(&a)["forecast"]["horizon"], 3);
}

#[test]
fn bad_request_values_exit_two_with_field() {
    let out = minecast(&["forecast", "--level", "annual", "--target", "COBRE", "--confidence", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["field"], "confidence");

    let out = minecast(&["forecast", "--level", "annual", "--target", "URANIO"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["code"], "selection");
}

#[test]
fn diagnose_prints_report() {
    let out = minecast(&["diagnose", "--level", "mineral", "--target", "ZINC"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v["diagnostics"]["ljung_box_pass"].is_boolean());
    assert_eq!(v["residuals"].as_array().unwrap().len(), v["diagnostics"]["n"].as_u64().unwrap() as usize);
}

#[test]
fn charts_prints_series() {
    let out = minecast(&["charts", "pie", "--group-by", "department", "--mineral", "COBRE"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v[0]["kind"], "Pie");

    let out = minecast(&["charts", "donut"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_and_flags_schema_errors() {
    let out = minecast(&["validate", "data/produccion_mensual_2020_2022.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["valid"], true);
    assert_eq!(v["report"]["rows_read"], 2151);
    assert_eq!(v["report"]["rows_dropped"], 0);

    let out = minecast(&["validate", "--annual", "data/produccion_anual_1980_2022.csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["report"]["rows_read"], 43);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "Mineral,Unidad de medida,Año,Enero\nORO,Gr. finos,2021,1\n").unwrap();
    let out = minecast(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let v = stdout_json(&out);
    assert_eq!(v["valid"], false);
    assert!(v["error"].as_str().unwrap().contains("Departamento"), "{v}");
    assert!(v["report"].is_object());
}

#[test]
fn ingest_writes_a_clean_table() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("clean.csv");
    let report = dir.path().join("report.json");
    let out = minecast(&[
        "ingest",
        "data/produccion_mensual_2020_2022.csv",
        "--out",
        out_csv.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let printed = stdout_json(&out);
    assert!(printed["values_imputed"].as_u64().unwrap() > 0);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(printed, saved);

    // The cleaned table validates with nothing left to impute or rename.
    let again = minecast(&["validate", out_csv.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    let v = stdout_json(&again);
    assert_eq!(v["report"]["rows_read"], 2151);
    assert_eq!(v["report"]["values_imputed"], 0);
    assert_eq!(v["report"]["names_corrected"], 0);
}

#[test]
fn missing_input_file_is_a_runtime_error() {
    let out = minecast(&["forecast", "--level", "annual", "--target", "COBRE", "--annual", "does/not/exist.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_sixty_four() {
    let out = minecast(&["forecast", "--level", "annual", "--target", "COBRE", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = minecast(&[]);
    assert_eq!(out.status.code(), Some(64));

    let out = minecast(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("forecast"));
}

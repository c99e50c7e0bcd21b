//! Queries the HTTP API in-process, without binding a port.
//!
//! ```text
//! cargo run -p minecast-service --example query_api --release
//! ```
//!
//! To run the real server instead: `cargo run -p minecast-service -- serve`.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use minecast::ingest::DEFAULT_K;
use minecast::pipeline::PipelineOptions;
use minecast_service::{router, AppState, DataPaths};
use tower::ServiceExt;

#[tokio::main(flavor = "current_thread")]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let paths = DataPaths {
        monthly: data.join("produccion_mensual_2020_2022.csv"),
        annual: data.join("produccion_anual_1980_2022.csv"),
        geo: Some(data.join("departamentos.geojson")),
    };
    let state = Arc::new(AppState::load(&paths, DEFAULT_K, PipelineOptions::default(), 256)?);
    let app = router(state);

    for uri in [
        "/api/health",
        "/api/departments",
        "/api/departments/Cusco/stats",
        "/api/charts/pie?group_by=stratum&mineral=ORO",
        "/api/forecast?level=annual&target=COBRE",
        "/api/forecast?level=Mineral",
    ] {
        let res = app.clone().oneshot(Request::get(uri).body(Body::empty())?).await?;
        let status = res.status();
        let body = res.into_body().collect().await?.to_bytes();
        let text = String::from_utf8_lossy(&body);
        let shown: String = text.chars().take(240).collect();
        println!("GET {uri}\n  {status}  {shown}{}\n", if text.len() > shown.len() { " ..." } else { "" });
    }
    Ok(())
}

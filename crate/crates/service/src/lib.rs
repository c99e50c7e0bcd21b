//! HTTP API and command-line front end over the `minecast` library.
//!
//! The router in [`api`] exposes department statistics, chart payloads,
//! forecasts, diagnostics and department boundaries as JSON. The [`cli`]
//! module drives the same operations from the shell.

pub mod api;
pub mod charts;
pub mod cli;
pub mod error;
pub mod query;
pub mod state;

use std::net::SocketAddr;
use std::sync::Arc;

pub use api::router;
pub use error::{ApiError, ErrorBody};
pub use state::{AppState, DataPaths, Datasets, GeoCollection, LoadError};

/// Serves the API until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

//! HTTP/JSON service running participatory DP sessions. Each session holds
//! one uploaded dataset, its released versions and a budget ledger.
//!
//! Mutating requests on one session are queued on a per-session lock;
//! reads proceed concurrently. Releases and sweeps run on the blocking pool.

pub mod config;
mod routes;
mod session;
mod state;

pub use config::{ConfigError, ServerArgs, ServerConfig};
pub use routes::{router, ServiceError, MAX_UPLOAD_BYTES};
pub use session::{Session, SweepPlan};
pub use state::{AppState, SessionHandle};

/// Serves on `listener` until `shutdown` resolves, then writes the session
/// snapshot if one is configured.
pub async fn serve(
    state: AppState,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    if let Some(path) = &state.config().snapshot_path {
        let n = state.write_snapshot(path).await?;
        tracing::info!(sessions = n, path = %path.display(), "snapshot written");
    }
    Ok(())
}

//! HTTP backend for annotation sessions and report retrieval.
//!
//! State is the corpus plus the annotations replayed from per-annotator
//! append-only logs. Each annotator's writes are serialized through that
//! annotator's log; readers see the replayed in-memory set.

pub mod api;
pub mod config;
pub mod error;
pub mod session;
pub mod state;

pub use api::{router, ANNOTATOR_HEADER};
pub use config::ServiceConfig;
pub use error::ApiError;
pub use session::{ManifestError, Session, Sessions};
pub use state::{AppState, StartupError};

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Startup(#[from] StartupError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Loads state from `config` and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    let state = AppState::load(&config)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

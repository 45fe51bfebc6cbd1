//! HTTP front end and startup wiring.

mod api;
mod config;

use std::path::Path;
use std::sync::Arc;

use axum::http::{HeaderValue, Method};
use axum::Router;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::corpus::CorpusError;
use crate::dialogue::DialogueError;

pub use api::{router, AppState, CandidateView, ErrorBody, SessionView, TurnView};
pub use config::{AppConfig, BackendKind, ProfileConfig, TemplatePaths};

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing or invalid template: {0}")]
    MissingTemplate(String),
    #[error("cannot load corpus index {path}: {source}")]
    Corpus { path: String, source: CorpusError },
    #[error("{0}")]
    Dialogue(DialogueError),
    #[error("cannot listen: {0}")]
    Io(#[from] std::io::Error),
}

impl From<DialogueError> for StartupError {
    fn from(e: DialogueError) -> Self {
        match e {
            DialogueError::MissingTemplate(m) => StartupError::MissingTemplate(m),
            DialogueError::Config(m) => StartupError::Config(m),
            other => StartupError::Dialogue(other),
        }
    }
}

/// Everything needed to serve: shared state plus the router with CORS.
pub fn build_app(config: &AppConfig) -> Result<(Arc<AppState>, Router), StartupError> {
    let engine = config.build_engine()?;
    let state = Arc::new(AppState::new(engine, config.max_sessions, config.request_timeout()));
    let mut app = router(state.clone());
    if !config.cors_origins.is_empty() {
        let origins = config
            .cors_origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| StartupError::Config(format!("bad CORS origin {o:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        app = app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(origins))
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([axum::http::header::CONTENT_TYPE]),
        );
    }
    Ok((state, app))
}

/// Serves until Ctrl-C or SIGTERM, lets running turns finish, then writes
/// the session snapshot if one is configured.
pub async fn serve(config: AppConfig) -> Result<(), StartupError> {
    let (state, app) = build_app(&config)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    tracing::info!(
        addr = %listener.local_addr()?,
        entries = state.engine.index().len(),
        "listening"
    );
    axum::serve(listener, app).with_graceful_shutdown(shutdown_signal()).await?;
    if let Some(path) = &config.session_snapshot {
        write_snapshot(&state, path)?;
        tracing::info!(path = %path.display(), "sessions saved");
    }
    Ok(())
}

pub fn write_snapshot(state: &AppState, path: &Path) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(&state.sessions()).expect("sessions serialize");
    std::fs::write(path, text)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    tracing::info!("shutting down");
}

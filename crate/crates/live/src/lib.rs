//! Live operation of the carbon-aware selector.
//!
//! A poller appends samples from an intensity feed to a shared history; an
//! HTTP API answers selection queries from that history and records every
//! served decision in an append-only JSON-lines log.

pub mod config;
pub mod decision_log;
pub mod history;
pub mod mock_feed;
pub mod poller;
pub mod service;

use std::sync::Arc;
use std::time::Duration;

use thiserror::Error;

pub use config::LiveConfig;
pub use decision_log::{DecisionLog, DecisionLogEntry};
pub use history::SharedHistory;
pub use service::{router, AppState};

#[derive(Debug, Error)]
pub enum LiveError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Log(#[from] decision_log::LogError),
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Boot the poller and the HTTP API; runs until the server stops.
pub async fn serve(config: LiveConfig) -> Result<(), LiveError> {
    let pool = config.resolve_pool()?;
    let window = config.window()?;
    let log = DecisionLog::open(&config.decision_log)?;
    let history = SharedHistory::default();

    tokio::spawn(poller::run_poller(
        config.feed_url.clone(),
        Duration::from_secs(config.poll_period_secs.max(1)),
        Duration::from_secs(config.poll_timeout_secs.max(1)),
        history.clone(),
    ));

    let state = Arc::new(AppState::new(history, log, pool, config.mapping, window));
    let listener = tokio::net::TcpListener::bind(&config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, feed = %config.feed_url, "serving model selection");
    axum::serve(listener, router(state)).await?;
    Ok(())
}

//! Intensity feed client.

use std::time::Duration;

use carbonsched::feed::{parse_feed_sample, FeedError, IntensityFeedSample};
use thiserror::Error;

use crate::history::SharedHistory;

#[derive(Debug, Error)]
pub enum PollError {
    #[error("feed request failed: {0}")]
    Network(String),
    #[error("feed request timed out")]
    Timeout,
    #[error("feed returned HTTP {0}")]
    Status(u16),
    #[error(transparent)]
    Feed(#[from] FeedError),
}

/// Fetch and parse one sample from `endpoint`.
pub async fn poll_intensity(
    client: &reqwest::Client,
    endpoint: &str,
    timeout: Duration,
) -> Result<IntensityFeedSample, PollError> {
    let resp = client.get(endpoint).timeout(timeout).send().await.map_err(classify)?;
    if !resp.status().is_success() {
        return Err(PollError::Status(resp.status().as_u16()));
    }
    let body = resp.bytes().await.map_err(classify)?;
    Ok(parse_feed_sample(&body)?)
}

fn classify(e: reqwest::Error) -> PollError {
    if e.is_timeout() {
        PollError::Timeout
    } else {
        PollError::Network(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PollOutcome {
    Added,
    Duplicate,
}

/// Poll once and append to `history`. Failures leave the history untouched.
pub async fn poll_once(
    client: &reqwest::Client,
    endpoint: &str,
    timeout: Duration,
    history: &SharedHistory,
) -> Result<PollOutcome, PollError> {
    let sample = poll_intensity(client, endpoint, timeout).await?;
    Ok(if history.insert(sample) { PollOutcome::Added } else { PollOutcome::Duplicate })
}

/// Poll forever at `period`, logging failures and carrying on.
pub async fn run_poller(endpoint: String, period: Duration, timeout: Duration, history: SharedHistory) {
    let client = reqwest::Client::new();
    let mut ticker = tokio::time::interval(period);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        ticker.tick().await;
        match poll_once(&client, &endpoint, timeout, &history).await {
            Ok(outcome) => tracing::debug!(?outcome, "polled intensity feed"),
            Err(e) => tracing::warn!(error = %e, "intensity poll failed; serving from last known history"),
        }
    }
}

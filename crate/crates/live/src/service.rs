//! HTTP API: `GET /v1/select` and `GET /v1/health`.

use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use carbonsched::registry::ModelPool;
use carbonsched::selector::{decide, BoundsWindow, MappingDirection};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::decision_log::DecisionLog;
use crate::history::SharedHistory;

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

pub struct AppState {
    pub history: SharedHistory,
    pub log: DecisionLog,
    pub pool: ModelPool,
    pub mapping: MappingDirection,
    pub window: BoundsWindow,
    pub clock: Clock,
}

impl AppState {
    pub fn new(history: SharedHistory, log: DecisionLog, pool: ModelPool, mapping: MappingDirection, window: BoundsWindow) -> Self {
        Self { history, log, pool, mapping, window, clock: Arc::new(Utc::now) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResponse {
    pub model: String,
    pub e_target_mj: f64,
    pub fraction: f64,
    pub c_current: f64,
    pub c_low: f64,
    pub c_high: f64,
    pub mapping: MappingDirection,
    #[serde(with = "carbonsched::time::iso")]
    pub decided_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub samples_ingested: usize,
    pub last_sample_from: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub reason: String,
}

fn error(status: StatusCode, reason: &str, message: String) -> Response {
    (status, Json(ErrorBody { error: message, reason: reason.to_string() })).into_response()
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/select", get(select))
        .route("/v1/health", get(health))
        .with_state(state)
}

/// The latest ingested sample supplies the current intensity; bounds are
/// observed over the window ending at that sample. The decision is logged
/// before it is returned.
async fn select(State(state): State<Arc<AppState>>) -> Response {
    let snapshot = state.history.snapshot();
    let Some(latest) = snapshot.latest() else {
        return error(StatusCode::SERVICE_UNAVAILABLE, "no_intensity_data", "no intensity data".into());
    };
    let history = snapshot.carbon_samples();
    let decision = match decide(latest.intensity_g_per_kwh, &history, latest.from, &state.pool, state.window, state.mapping) {
        Ok(d) => d,
        Err(e) => return error(StatusCode::SERVICE_UNAVAILABLE, "no_samples_in_window", e.to_string()),
    };
    let now = (state.clock)();
    let entry = match state.log.record(&decision, state.mapping, state.window, &state.pool, now) {
        Ok(entry) => entry,
        Err(e) => {
            tracing::error!(error = %e, "decision log write failed; not serving");
            return error(StatusCode::INTERNAL_SERVER_ERROR, "decision_log_write_failed", e.to_string());
        }
    };
    Json(SelectionResponse {
        model: entry.model,
        e_target_mj: entry.e_target_mj,
        fraction: entry.fraction,
        c_current: entry.c_current,
        c_low: entry.bounds.c_low,
        c_high: entry.bounds.c_high,
        mapping: entry.mapping,
        decided_at: entry.decided_at,
    })
    .into_response()
}

async fn health(State(state): State<Arc<AppState>>) -> Json<HealthResponse> {
    let snapshot = state.history.snapshot();
    Json(HealthResponse {
        status: if snapshot.is_empty() { "waiting".into() } else { "ok".into() },
        samples_ingested: snapshot.len(),
        last_sample_from: snapshot.latest().map(|s| carbonsched::time::format_timestamp(&s.from)),
    })
}

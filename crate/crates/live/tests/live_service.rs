use std::sync::Arc;
use std::time::Duration;

use carbonsched::feed::IntensityFeedSample;
use carbonsched::registry::builtin_resnet_only;
use carbonsched::selector::{BoundsWindow, MappingDirection};
use carbonsched_live::decision_log::{read_log, verify_entries, DecisionLog};
use carbonsched_live::mock_feed::MockFeed;
use carbonsched_live::poller::{poll_once, PollError, PollOutcome};
use carbonsched_live::service::{ErrorBody, HealthResponse, SelectionResponse};
use carbonsched_live::{router, AppState, SharedHistory};
use chrono::{Duration as ChronoDuration, TimeZone, Utc};

const TIMEOUT: Duration = Duration::from_secs(5);

fn sample(i: i64, c: f64) -> IntensityFeedSample {
    let t0 = Utc.with_ymd_and_hms(2023, 6, 1, 0, 0, 0).unwrap();
    IntensityFeedSample {
        from: t0 + ChronoDuration::minutes(30 * i),
        to: t0 + ChronoDuration::minutes(30 * (i + 1)),
        intensity_g_per_kwh: c,
    }
}

struct Service {
    base: String,
    history: SharedHistory,
    _task: tokio::task::JoinHandle<()>,
}

async fn start_service(log: DecisionLog, mapping: MappingDirection) -> Service {
    let history = SharedHistory::default();
    let state = Arc::new(AppState::new(
        history.clone(),
        log,
        builtin_resnet_only(),
        mapping,
        BoundsWindow::Trailing { hours: 24 },
    ));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let task = tokio::spawn(async move {
        axum::serve(listener, router(state)).await.unwrap();
    });
    Service { base, history, _task: task }
}

#[tokio::test]
async fn poll_adds_dedups_and_rejects() {
    let feed = MockFeed::start(vec![sample(0, 171.0), sample(0, 171.0), sample(1, -5.0)]).await.unwrap();
    let client = reqwest::Client::new();
    let history = SharedHistory::default();
    assert_eq!(poll_once(&client, &feed.url(), TIMEOUT, &history).await.unwrap(), PollOutcome::Added);
    assert_eq!(history.snapshot().latest().unwrap().intensity_g_per_kwh, 171.0);
    assert_eq!(poll_once(&client, &feed.url(), TIMEOUT, &history).await.unwrap(), PollOutcome::Duplicate);
    let err = poll_once(&client, &feed.url(), TIMEOUT, &history).await.unwrap_err();
    assert!(matches!(err, PollError::Feed(_)), "{err}");
    assert_eq!(history.snapshot().len(), 1);
}

#[tokio::test]
async fn outages_and_unreachable_feeds_leave_history_alone() {
    let feed = MockFeed::start(vec![sample(0, 100.0), sample(1, 200.0)]).await.unwrap();
    let client = reqwest::Client::new();
    let history = SharedHistory::default();
    poll_once(&client, &feed.url(), TIMEOUT, &history).await.unwrap();
    feed.set_outage(true);
    assert!(matches!(poll_once(&client, &feed.url(), TIMEOUT, &history).await, Err(PollError::Status(503))));
    let dead = "http://127.0.0.1:9/intensity";
    assert!(matches!(poll_once(&client, dead, TIMEOUT, &history).await, Err(PollError::Network(_))));
    assert_eq!(history.snapshot().len(), 1);
    feed.set_outage(false);
    poll_once(&client, &feed.url(), TIMEOUT, &history).await.unwrap();
    assert_eq!(history.snapshot().len(), 2);
}

#[tokio::test]
async fn select_before_first_sample_is_503() {
    let dir = tempfile::tempdir().unwrap();
    let svc = start_service(DecisionLog::open(dir.path().join("d.jsonl")).unwrap(), MappingDirection::Prose).await;
    let resp = reqwest::get(format!("{}/v1/select", svc.base)).await.unwrap();
    assert_eq!(resp.status().as_u16(), 503);
    let body: ErrorBody = serde_json::from_slice(&resp.bytes().await.unwrap()).unwrap();
    assert_eq!(body.error, "no intensity data");
    assert_eq!(body.reason, "no_intensity_data");
    let health: HealthResponse =
        serde_json::from_slice(&reqwest::get(format!("{}/v1/health", svc.base)).await.unwrap().bytes().await.unwrap()).unwrap();
    assert_eq!(health, HealthResponse { status: "waiting".into(), samples_ingested: 0, last_sample_from: None });
    assert!(read_log(&dir.path().join("d.jsonl")).unwrap().entries.is_empty());
}

async fn select(base: &str) -> SelectionResponse {
    let resp = reqwest::get(format!("{base}/v1/select")).await.unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    serde_json::from_slice(&resp.bytes().await.unwrap()).unwrap()
}

#[tokio::test]
async fn selections_follow_history_and_are_logged() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    let svc = start_service(DecisionLog::open(&path).unwrap(), MappingDirection::Prose).await;

    svc.history.insert(sample(0, 100.0));
    let first = select(&svc.base).await;
    assert_eq!((first.model.as_str(), first.fraction), ("ResNet152", 0.0));

    svc.history.insert(sample(1, 200.0));
    let second = select(&svc.base).await;
    assert_eq!(second.model, "ResNet34");
    assert_eq!((second.c_low, second.c_high, second.c_current), (100.0, 200.0, 200.0));
    assert_eq!(second.mapping, MappingDirection::Prose);

    let health: HealthResponse =
        serde_json::from_slice(&reqwest::get(format!("{}/v1/health", svc.base)).await.unwrap().bytes().await.unwrap()).unwrap();
    assert_eq!(health.samples_ingested, 2);
    assert_eq!(health.last_sample_from.as_deref(), Some("2023-06-01T00:30:00Z"));

    let replay = read_log(&path).unwrap();
    assert_eq!(replay.entries.len(), 2);
    assert_eq!(replay.entries[1].model, second.model);
    assert_eq!(replay.entries[1].decided_at, second.decided_at);
    assert!(replay.entries[0].decided_at <= replay.entries[1].decided_at);
    assert!(verify_entries(&replay.entries, &builtin_resnet_only()).is_empty());
}

#[tokio::test]
async fn log_write_failure_is_a_500() {
    let full = std::fs::OpenOptions::new().write(true).open("/dev/full").unwrap();
    let svc = start_service(DecisionLog::from_file("/dev/full", full), MappingDirection::Prose).await;
    svc.history.insert(sample(0, 100.0));
    let resp = reqwest::get(format!("{}/v1/select", svc.base)).await.unwrap();
    assert_eq!(resp.status().as_u16(), 500);
    let body: ErrorBody = serde_json::from_slice(&resp.bytes().await.unwrap()).unwrap();
    assert_eq!(body.reason, "decision_log_write_failed");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn readers_never_observe_partial_updates() {
    let history = SharedHistory::default();
    let writer = {
        let h = history.clone();
        tokio::spawn(async move {
            for i in 0..500 {
                h.insert(sample(i, i as f64));
                tokio::task::yield_now().await;
            }
        })
    };
    let mut readers = Vec::new();
    for _ in 0..4 {
        let h = history.clone();
        readers.push(tokio::spawn(async move {
            for _ in 0..500 {
                let snap = h.snapshot();
                // Inserts arrive in order, so any snapshot is a prefix.
                for (i, s) in snap.samples().iter().enumerate() {
                    assert_eq!(s.intensity_g_per_kwh, i as f64);
                }
                tokio::task::yield_now().await;
            }
        }));
    }
    writer.await.unwrap();
    for r in readers {
        r.await.unwrap();
    }
    assert_eq!(history.snapshot().len(), 500);
}

//! A local intensity feed that replays a fixed series, for tests and demos.
//!
//! Each `GET /intensity` returns the next sample; once the series is
//! exhausted the last sample is repeated. An outage switch makes the feed
//! answer 503.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use carbonsched::feed::IntensityFeedSample;
use tokio::task::JoinHandle;

#[derive(Debug)]
struct Feed {
    samples: Vec<IntensityFeedSample>,
    cursor: AtomicUsize,
    outage: AtomicBool,
}

pub struct MockFeed {
    pub addr: SocketAddr,
    feed: Arc<Feed>,
    task: JoinHandle<()>,
}

impl MockFeed {
    pub async fn start(samples: Vec<IntensityFeedSample>) -> std::io::Result<Self> {
        Self::bind("127.0.0.1:0", samples).await
    }

    pub async fn bind(addr: &str, samples: Vec<IntensityFeedSample>) -> std::io::Result<Self> {
        let feed = Arc::new(Feed { samples, cursor: AtomicUsize::new(0), outage: AtomicBool::new(false) });
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let addr = listener.local_addr()?;
        let app = Router::new().route("/intensity", get(next_sample)).with_state(feed.clone());
        let task = tokio::spawn(async move {
            let _ = axum::serve(listener, app).await;
        });
        Ok(Self { addr, feed, task })
    }

    pub fn url(&self) -> String {
        format!("http://{}/intensity", self.addr)
    }

    pub fn set_outage(&self, down: bool) {
        self.feed.outage.store(down, Ordering::SeqCst);
    }

    /// Number of samples served so far (capped at the series length).
    pub fn served(&self) -> usize {
        self.feed.cursor.load(Ordering::SeqCst).min(self.feed.samples.len())
    }
}

impl Drop for MockFeed {
    fn drop(&mut self) {
        self.task.abort();
    }
}

async fn next_sample(State(feed): State<Arc<Feed>>) -> Response {
    if feed.outage.load(Ordering::SeqCst) || feed.samples.is_empty() {
        return StatusCode::SERVICE_UNAVAILABLE.into_response();
    }
    let i = feed.cursor.fetch_add(1, Ordering::SeqCst).min(feed.samples.len() - 1);
    Json(feed.samples[i].clone()).into_response()
}

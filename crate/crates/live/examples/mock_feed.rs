//! Serve a carbon-intensity CSV as a polling feed.
//!
//! ```text
//! cargo run -p carbonsched-live --example mock_feed -- data/sample_carbon.csv 127.0.0.1:8081
//! ```

use carbonsched::feed::IntensityFeedSample;
use carbonsched::traces::load_carbon_trace;
use carbonsched_live::mock_feed::MockFeed;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().ok_or("usage: mock_feed <carbon.csv> [addr]")?;
    let addr = args.next().unwrap_or_else(|| "127.0.0.1:8081".into());
    let trace = load_carbon_trace(&std::fs::read_to_string(&path)?)?;
    let samples = trace
        .samples()
        .iter()
        .map(|s| IntensityFeedSample { from: s.interval.start, to: s.interval.end, intensity_g_per_kwh: s.intensity_g_per_kwh })
        .collect();
    let feed = MockFeed::bind(&addr, samples).await?;
    println!("serving {} samples from {path} at {}", trace.len(), feed.url());
    tokio::signal::ctrl_c().await?;
    Ok(())
}

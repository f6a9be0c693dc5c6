//! Random trace generators shared by property tests.
#![allow(dead_code)]

use carbonsched::traces::{CarbonSample, CarbonTrace, Interval, RequestSample, RequestTrace};
use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2023, 6, 1, 0, 0, 0).unwrap()
}

pub fn minutes(a: i64, b: i64) -> Interval {
    Interval::new(t0() + Duration::minutes(a), t0() + Duration::minutes(b)).unwrap()
}

/// `n` contiguous 30-minute carbon samples.
pub fn carbon_grid(intensities: &[f64]) -> CarbonTrace {
    CarbonTrace::new(
        intensities
            .iter()
            .enumerate()
            .map(|(i, &v)| CarbonSample { interval: minutes(30 * i as i64, 30 * (i as i64 + 1)), intensity_g_per_kwh: v })
            .collect(),
    )
    .unwrap()
}

/// Requests on the same 30-minute grid.
pub fn request_grid(counts: &[u64]) -> RequestTrace {
    RequestTrace::new(
        counts
            .iter()
            .enumerate()
            .map(|(i, &count)| RequestSample { interval: minutes(30 * i as i64, 30 * (i as i64 + 1)), count })
            .collect(),
    )
    .unwrap()
}

pub fn random_carbon(rng: &mut impl Rng, steps: usize) -> CarbonTrace {
    let v: Vec<f64> = (0..steps).map(|_| rng.gen_range(20.0..400.0)).collect();
    carbon_grid(&v)
}

/// Requests over `[0, total_minutes)` cut into random minute-aligned pieces.
pub fn random_requests(rng: &mut impl Rng, total_minutes: i64, max_count: u64) -> RequestTrace {
    let mut samples = Vec::new();
    let mut at = 0;
    while at < total_minutes {
        let width = rng.gen_range(1..=90).min(total_minutes - at);
        samples.push(RequestSample { interval: minutes(at, at + width), count: rng.gen_range(0..=max_count) });
        at += width;
    }
    RequestTrace::new(samples).unwrap()
}

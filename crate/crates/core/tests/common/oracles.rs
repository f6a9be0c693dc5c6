//! Independent reference computations used by the property and acceptance
//! suites. Nothing here calls into the alignment or accounting code paths
//! it is compared against.
#![allow(dead_code)]

use std::collections::BTreeMap;

use carbonsched::registry::ModelPool;
use carbonsched::selector::{decide_with_bounds, BoundsWindow, IntensityBounds, MappingDirection};
use carbonsched::traces::{AlignedTimeline, CarbonTrace, RequestTrace};
use chrono::{DateTime, Duration, Utc};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// Per-minute attribution: each request spreads its count uniformly over its
/// minutes; each minute is credited to the carbon interval containing it.
/// Traces must be minute-aligned. Returns expected (fractional) counts per
/// carbon interval, keyed by interval start.
pub fn per_minute_attribution(carbon: &CarbonTrace, requests: &RequestTrace) -> BTreeMap<DateTime<Utc>, f64> {
    let mut out = BTreeMap::new();
    for r in requests.samples() {
        let minutes = (r.interval.end - r.interval.start).num_minutes();
        let per_minute = r.count as f64 / minutes as f64;
        for m in 0..minutes {
            let t = r.interval.start + Duration::minutes(m);
            if let Some(c) = carbon.samples().iter().find(|c| c.interval.start <= t && t < c.interval.end) {
                *out.entry(c.interval.start).or_insert(0.0) += per_minute;
            }
        }
    }
    out
}

fn mantissa_exp(x: f64) -> (i128, i32) {
    use num_traits::Float;
    let (m, e, s) = x.integer_decode();
    (s as i128 * m as i128, e as i32)
}

/// Exact grams, one request at a time: every request re-runs the selection
/// and adds its own `energy × intensity` term. Bounds per step are found by
/// a direct scan of the carbon trace.
pub fn per_request_total_grams(
    timeline: &AlignedTimeline,
    carbon: &CarbonTrace,
    pool: &ModelPool,
    dir: MappingDirection,
    window: BoundsWindow,
) -> f64 {
    let global = IntensityBounds {
        c_low: carbon.samples().iter().map(|s| s.intensity_g_per_kwh).fold(f64::INFINITY, f64::min),
        c_high: carbon.samples().iter().map(|s| s.intensity_g_per_kwh).fold(f64::NEG_INFINITY, f64::max),
    };
    // exponent -> exact integer sum of mantissa products
    let mut buckets: BTreeMap<i32, i128> = BTreeMap::new();
    for step in &timeline.steps {
        let bounds = if let BoundsWindow::Trailing { hours } = window {
            let at = step.interval.start;
            let seen: Vec<f64> = carbon
                .samples()
                .iter()
                .filter(|s| s.interval.start <= at && s.interval.start >= at - Duration::hours(hours.into()))
                .map(|s| s.intensity_g_per_kwh)
                .collect();
            IntensityBounds {
                c_low: seen.iter().cloned().fold(f64::INFINITY, f64::min),
                c_high: seen.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            }
        } else {
            global
        };
        for _ in 0..step.count {
            let d = decide_with_bounds(step.intensity_g_per_kwh, bounds, pool, dir);
            let energy = pool.get(&d.model).unwrap().energy_mj;
            let (me, ee) = mantissa_exp(energy);
            let (mi, ei) = mantissa_exp(step.intensity_g_per_kwh);
            *buckets.entry(ee + ei).or_insert(0) += me * mi;
        }
    }
    let mut total = BigRational::zero();
    for (exp, sum) in buckets {
        let scale = BigRational::from_integer(BigInt::from(2)).pow(exp);
        total += BigRational::from_integer(BigInt::from(sum)) * scale;
    }
    (total / BigRational::from_integer(BigInt::from(3_600_000_000u64))).to_f64().unwrap()
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Index of the profile with minimal |energy - target|, lower energy then
/// earlier index winning ties.
pub fn brute_force_argmin(target: f64, pool: &ModelPool) -> usize {
    let mut best = 0;
    for (i, p) in pool.profiles().iter().enumerate() {
        let b = &pool.profiles()[best];
        let (dp, db) = ((p.energy_mj - target).abs(), (b.energy_mj - target).abs());
        if dp < db || (dp == db && p.energy_mj < b.energy_mj) {
            best = i;
        }
    }
    best
}

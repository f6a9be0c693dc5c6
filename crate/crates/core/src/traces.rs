//! Carbon-intensity and request-count time series.
//!
//! Both traces are sequences of half-open `[start, end)` intervals. Carbon
//! intensity is piecewise-constant on each carbon interval; request counts
//! are spread uniformly over their own interval and re-attributed onto the
//! carbon grid by [`align`].

use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feed::IntensityFeedSample;
use crate::time::{format_timestamp, parse_timestamp};

pub const CARBON_HEADER: [&str; 3] = ["start_utc", "end_utc", "intensity_g_per_kwh"];
pub const REQUEST_HEADER: [&str; 3] = ["start_utc", "end_utc", "count"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("missing header `{expected}`")]
    MissingHeader { expected: String },
    #[error("unexpected header at line {line}: expected `{expected}`, found `{found}`")]
    BadHeader { line: u64, expected: String, found: String },
    #[error("malformed row at line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("malformed timestamp `{value}` at line {line}")]
    BadTimestamp { line: u64, value: String },
    #[error("empty interval at line {line}: start must precede end")]
    EmptyInterval { line: u64 },
    #[error("negative intensity at line {line}: {value}")]
    NegativeIntensity { line: u64, value: f64 },
    #[error("negative count at line {line}: {value}")]
    NegativeCount { line: u64, value: String },
    #[error("non-integer count at line {line}: {value}")]
    NonIntegerCount { line: u64, value: String },
    #[error("overlapping intervals at lines {first} and {second}")]
    Overlap { first: u64, second: u64 },
    #[error("empty trace")]
    Empty,
}

impl TraceError {
    /// First source line implicated by the error, if any.
    pub fn line(&self) -> Option<u64> {
        match self {
            TraceError::BadHeader { line, .. }
            | TraceError::Malformed { line, .. }
            | TraceError::BadTimestamp { line, .. }
            | TraceError::EmptyInterval { line }
            | TraceError::NegativeIntensity { line, .. }
            | TraceError::NegativeCount { line, .. }
            | TraceError::NonIntegerCount { line, .. } => Some(*line),
            TraceError::Overlap { first, second } => Some((*first).min(*second)),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlignError {
    #[error("carbon trace does not cover request time {start} .. {end}")]
    CoverageGap { start: String, end: String },
    #[error("request and carbon traces do not overlap")]
    NoOverlap,
}

/// Half-open interval `[start, end)` in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "crate::time::iso")]
    pub start: DateTime<Utc>,
    #[serde(with = "crate::time::iso")]
    pub end: DateTime<Utc>,
}

impl Interval {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Option<Self> {
        (start < end).then_some(Self { start, end })
    }

    pub fn duration_ns(&self) -> i128 {
        ns_between(self.start, self.end)
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end
    }

    /// Length of the intersection in nanoseconds (0 when disjoint).
    pub fn overlap_ns(&self, other: &Interval) -> i128 {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        if start < end {
            ns_between(start, end)
        } else {
            0
        }
    }
}

fn ns_between(a: DateTime<Utc>, b: DateTime<Utc>) -> i128 {
    let d = b - a;
    d.num_seconds() as i128 * 1_000_000_000 + d.subsec_nanos() as i128
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarbonSample {
    pub interval: Interval,
    pub intensity_g_per_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestSample {
    pub interval: Interval,
    pub count: u64,
}

/// Sorted, non-overlapping, non-empty intensity series.
#[derive(Debug, Clone, PartialEq)]
pub struct CarbonTrace {
    samples: Vec<CarbonSample>,
}

/// Sorted, non-overlapping, non-empty request-count series.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestTrace {
    samples: Vec<RequestSample>,
}

/// Sort rows by start and reject overlaps, reporting original line numbers.
fn sort_and_check<T>(mut rows: Vec<(u64, Interval, T)>) -> Result<Vec<(u64, Interval, T)>, TraceError> {
    if rows.is_empty() {
        return Err(TraceError::Empty);
    }
    rows.sort_by_key(|(line, iv, _)| (iv.start, *line));
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.1.end > b.1.start {
            let (first, second) = if a.0 <= b.0 { (a.0, b.0) } else { (b.0, a.0) };
            return Err(TraceError::Overlap { first, second });
        }
    }
    Ok(rows)
}

impl CarbonTrace {
    /// Build from samples in any order; validates intensities and overlap.
    /// Line numbers in errors are 1-based positions in `samples`.
    pub fn new(samples: Vec<CarbonSample>) -> Result<Self, TraceError> {
        let mut rows = Vec::with_capacity(samples.len());
        for (i, s) in samples.into_iter().enumerate() {
            let line = i as u64 + 1;
            if s.interval.start >= s.interval.end {
                return Err(TraceError::EmptyInterval { line });
            }
            if !(s.intensity_g_per_kwh >= 0.0 && s.intensity_g_per_kwh.is_finite()) {
                return Err(TraceError::NegativeIntensity { line, value: s.intensity_g_per_kwh });
            }
            rows.push((line, s.interval, s.intensity_g_per_kwh));
        }
        Ok(Self::from_rows(sort_and_check(rows)?))
    }

    fn from_rows(rows: Vec<(u64, Interval, f64)>) -> Self {
        let samples = rows
            .into_iter()
            .map(|(_, interval, intensity_g_per_kwh)| CarbonSample { interval, intensity_g_per_kwh })
            .collect();
        Self { samples }
    }

    pub fn samples(&self) -> &[CarbonSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> Interval {
        Interval {
            start: self.samples[0].interval.start,
            end: self.samples[self.samples.len() - 1].interval.end,
        }
    }

    pub fn min_intensity(&self) -> f64 {
        self.samples.iter().map(|s| s.intensity_g_per_kwh).fold(f64::INFINITY, f64::min)
    }

    pub fn max_intensity(&self) -> f64 {
        self.samples.iter().map(|s| s.intensity_g_per_kwh).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("start_utc,end_utc,intensity_g_per_kwh\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{}",
                format_timestamp(&s.interval.start),
                format_timestamp(&s.interval.end),
                s.intensity_g_per_kwh
            );
        }
        out
    }

    pub fn digest(&self) -> String {
        crate::sha256_hex(self.to_csv().as_bytes())
    }
}

impl RequestTrace {
    pub fn new(samples: Vec<RequestSample>) -> Result<Self, TraceError> {
        let mut rows = Vec::with_capacity(samples.len());
        for (i, s) in samples.into_iter().enumerate() {
            let line = i as u64 + 1;
            if s.interval.start >= s.interval.end {
                return Err(TraceError::EmptyInterval { line });
            }
            rows.push((line, s.interval, s.count));
        }
        Ok(Self::from_rows(sort_and_check(rows)?))
    }

    fn from_rows(rows: Vec<(u64, Interval, u64)>) -> Self {
        let samples = rows.into_iter().map(|(_, interval, count)| RequestSample { interval, count }).collect();
        Self { samples }
    }

    pub fn samples(&self) -> &[RequestSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> Interval {
        Interval {
            start: self.samples[0].interval.start,
            end: self.samples[self.samples.len() - 1].interval.end,
        }
    }

    pub fn total_count(&self) -> u128 {
        self.samples.iter().map(|s| s.count as u128).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("start_utc,end_utc,count\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{}",
                format_timestamp(&s.interval.start),
                format_timestamp(&s.interval.end),
                s.count
            );
        }
        out
    }

    pub fn digest(&self) -> String {
        crate::sha256_hex(self.to_csv().as_bytes())
    }
}

/// Shared row reader: header check, then `(line, interval, third column)`.
fn read_rows(source: &str, header: [&str; 3]) -> Result<Vec<(u64, Interval, String)>, TraceError> {
    let expected = header.join(",");
    let mut reader = crate::csv_reader(source.as_bytes());
    let mut header_seen = false;
    let mut rows = Vec::new();

    for record in reader.records() {
        let record = record.map_err(|e| TraceError::Malformed {
            line: crate::csv_error_line(&e),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if !header_seen {
            if record.len() != 3 || record.iter().zip(header).any(|(a, b)| a != b) {
                return Err(TraceError::BadHeader {
                    line,
                    expected,
                    found: record.iter().collect::<Vec<_>>().join(","),
                });
            }
            header_seen = true;
            continue;
        }
        if record.len() != 3 {
            return Err(TraceError::Malformed {
                line,
                reason: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let start = parse_timestamp(&record[0])
            .ok_or_else(|| TraceError::BadTimestamp { line, value: record[0].to_string() })?;
        let end = parse_timestamp(&record[1])
            .ok_or_else(|| TraceError::BadTimestamp { line, value: record[1].to_string() })?;
        let interval = Interval::new(start, end).ok_or(TraceError::EmptyInterval { line })?;
        rows.push((line, interval, record[2].to_string()));
    }

    if !header_seen {
        return Err(TraceError::MissingHeader { expected });
    }
    Ok(rows)
}

/// Parse a carbon-intensity CSV (`start_utc,end_utc,intensity_g_per_kwh`).
/// Rows may appear in any order; they are sorted before the overlap check.
pub fn load_carbon_trace(source: &str) -> Result<CarbonTrace, TraceError> {
    let mut rows = Vec::new();
    for (line, interval, raw) in read_rows(source, CARBON_HEADER)? {
        let value: f64 = match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => {
                return Err(TraceError::Malformed {
                    line,
                    reason: format!("intensity `{raw}` is not a finite number"),
                })
            }
        };
        if value < 0.0 {
            return Err(TraceError::NegativeIntensity { line, value });
        }
        rows.push((line, interval, value));
    }
    Ok(CarbonTrace::from_rows(sort_and_check(rows)?))
}

/// Parse a request-count CSV (`start_utc,end_utc,count`).
pub fn load_request_trace(source: &str) -> Result<RequestTrace, TraceError> {
    let mut rows = Vec::new();
    for (line, interval, raw) in read_rows(source, REQUEST_HEADER)? {
        rows.push((line, interval, parse_count(&raw, line)?));
    }
    Ok(RequestTrace::from_rows(sort_and_check(rows)?))
}

fn parse_count(raw: &str, line: u64) -> Result<u64, TraceError> {
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    if let Ok(v) = raw.parse::<i128>() {
        return Err(if v < 0 {
            TraceError::NegativeCount { line, value: raw.to_string() }
        } else {
            TraceError::Malformed { line, reason: format!("count `{raw}` out of range") }
        });
    }
    match raw.parse::<f64>() {
        Ok(v) if v < 0.0 => Err(TraceError::NegativeCount { line, value: raw.to_string() }),
        Ok(v) if v.is_finite() => Err(TraceError::NonIntegerCount { line, value: raw.to_string() }),
        _ => Err(TraceError::Malformed { line, reason: format!("count `{raw}` is not a number") }),
    }
}

/// Replay intensity history from feed-shaped JSON: either a JSON array of
/// samples or one sample object per line.
pub fn load_carbon_feed_json(source: &str) -> Result<CarbonTrace, TraceError> {
    let trimmed = source.trim_start();
    let parsed: Vec<(u64, IntensityFeedSample)> = if trimmed.starts_with('[') {
        let samples: Vec<IntensityFeedSample> = serde_json::from_str(source).map_err(|e| TraceError::Malformed {
            line: e.line() as u64,
            reason: e.to_string(),
        })?;
        samples.into_iter().enumerate().map(|(i, s)| (i as u64 + 1, s)).collect()
    } else {
        let mut out = Vec::new();
        for (i, raw) in source.lines().enumerate() {
            let line = i as u64 + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let sample = serde_json::from_str(raw).map_err(|e| TraceError::Malformed { line, reason: e.to_string() })?;
            out.push((line, sample));
        }
        out
    };

    let mut rows = Vec::with_capacity(parsed.len());
    for (line, s) in parsed {
        if !(s.intensity_g_per_kwh >= 0.0 && s.intensity_g_per_kwh.is_finite()) {
            return Err(TraceError::NegativeIntensity { line, value: s.intensity_g_per_kwh });
        }
        let interval = Interval::new(s.from, s.to).ok_or(TraceError::EmptyInterval { line })?;
        rows.push((line, interval, s.intensity_g_per_kwh));
    }
    Ok(CarbonTrace::from_rows(sort_and_check(rows)?))
}

/// How request time not covered by any carbon interval is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    /// Uncovered request time is an error.
    #[default]
    Strict,
    /// Uncovered time takes the intensity of the most recent earlier carbon
    /// sample. Time before the first carbon sample stays uncovered.
    CarryForward,
}

impl std::str::FromStr for GapPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(GapPolicy::Strict),
            "carry_forward" | "carry-forward" => Ok(GapPolicy::CarryForward),
            other => Err(format!("unknown gap policy `{other}` (expected strict|carry_forward)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedStep {
    pub interval: Interval,
    pub intensity_g_per_kwh: f64,
    pub count: u64,
    /// True when the intensity was carried forward over a gap in the carbon trace.
    pub carried_forward: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedTimeline {
    pub steps: Vec<AlignedStep>,
}

impl AlignedTimeline {
    pub fn total_count(&self) -> u128 {
        self.steps.iter().map(|s| s.count as u128).sum()
    }
}

/// Attribute request counts onto the carbon grid.
///
/// Each request sample's count is spread over its interval and credited to
/// every step by overlap length. The exact (rational) per-step quotas are
/// rounded with largest-remainder so step counts are integral, each within
/// one request of its quota, and sum to the rounded covered total. Ties in
/// the remainder go to the earlier step.
pub fn align(carbon: &CarbonTrace, requests: &RequestTrace, gap_policy: GapPolicy) -> Result<AlignedTimeline, AlignError> {
    let csamples = carbon.samples();
    let rsamples = requests.samples();

    let raw_overlap: i128 = rsamples
        .iter()
        .map(|r| csamples.iter().map(|c| c.interval.overlap_ns(&r.interval)).sum::<i128>())
        .sum();
    if raw_overlap == 0 {
        return Err(AlignError::NoOverlap);
    }

    // Candidate steps in time order: carbon intervals, plus carried-forward
    // gap segments when allowed.
    let request_end = requests.span().end;
    let mut candidates: Vec<(Interval, f64, bool)> = Vec::with_capacity(csamples.len());
    for (i, c) in csamples.iter().enumerate() {
        candidates.push((c.interval, c.intensity_g_per_kwh, false));
        if gap_policy == GapPolicy::CarryForward {
            let gap_end = csamples.get(i + 1).map(|n| n.interval.start).unwrap_or(request_end);
            if let Some(gap) = Interval::new(c.interval.end, gap_end) {
                candidates.push((gap, c.intensity_g_per_kwh, true));
            }
        }
    }

    if gap_policy == GapPolicy::Strict {
        for r in rsamples {
            let covered: i128 = csamples.iter().map(|c| c.interval.overlap_ns(&r.interval)).sum();
            if covered < r.interval.duration_ns() {
                let (start, end) = first_uncovered(&r.interval, csamples);
                return Err(AlignError::CoverageGap {
                    start: format_timestamp(&start),
                    end: format_timestamp(&end),
                });
            }
        }
    }

    let mut quotas: Vec<BigRational> = vec![BigRational::zero(); candidates.len()];
    let mut touched = vec![false; candidates.len()];
    for r in rsamples {
        let duration = r.interval.duration_ns();
        // Candidates are sorted and disjoint, so binary search for the first
        // one ending after the request starts.
        let first = candidates.partition_point(|(iv, _, _)| iv.end <= r.interval.start);
        for (k, (iv, _, _)) in candidates.iter().enumerate().skip(first) {
            if iv.start >= r.interval.end {
                break;
            }
            let overlap = iv.overlap_ns(&r.interval);
            if overlap > 0 {
                touched[k] = true;
                quotas[k] += BigRational::new(BigInt::from(r.count) * BigInt::from(overlap), BigInt::from(duration));
            }
        }
    }

    let kept: Vec<usize> = (0..candidates.len()).filter(|&k| touched[k]).collect();
    let kept_quotas: Vec<BigRational> = kept.iter().map(|&k| quotas[k].clone()).collect();
    let counts = largest_remainder(&kept_quotas);

    let steps = kept
        .iter()
        .zip(counts)
        .map(|(&k, count)| {
            let (interval, intensity_g_per_kwh, carried_forward) = candidates[k];
            AlignedStep { interval, intensity_g_per_kwh, count, carried_forward }
        })
        .collect();
    Ok(AlignedTimeline { steps })
}

fn first_uncovered(r: &Interval, carbon: &[CarbonSample]) -> (DateTime<Utc>, DateTime<Utc>) {
    let mut cursor = r.start;
    for c in carbon {
        if c.interval.end <= cursor {
            continue;
        }
        if c.interval.start > cursor {
            return (cursor, c.interval.start.min(r.end));
        }
        cursor = c.interval.end;
        if cursor >= r.end {
            break;
        }
    }
    (cursor, r.end)
}

/// Round non-negative quotas to integers summing to `round(Σ quotas)`,
/// each result being the floor or ceiling of its quota.
fn largest_remainder(quotas: &[BigRational]) -> Vec<u64> {
    let total: BigRational = quotas.iter().fold(BigRational::zero(), |acc, q| acc + q);
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let target = (total + half).floor().to_integer();

    let mut counts: Vec<BigInt> = quotas.iter().map(|q| q.floor().to_integer()).collect();
    let assigned: BigInt = counts.iter().sum();
    let mut leftover = (target - assigned).to_usize().expect("leftover is non-negative and bounded by step count");

    let mut order: Vec<(usize, BigRational)> = quotas.iter().map(|q| q.fract()).enumerate().collect();
    // Stable sort keeps earlier steps first among equal remainders.
    order.sort_by(|a, b| b.1.cmp(&a.1));
    for (idx, rem) in order {
        if leftover == 0 || rem.is_zero() {
            break;
        }
        counts[idx] += 1;
        leftover -= 1;
    }
    counts.into_iter().map(|c| c.to_u64().expect("count fits in u64")).collect()
}

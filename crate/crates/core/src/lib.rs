//! Carbon-intensity-aware model selection for DNN inference.
//!
//! The crate picks, for every point in time, a model from a pool of
//! profiles (energy per inference, error rate) according to where the
//! current grid carbon intensity sits between the observed extremes, and
//! replays request and intensity traces to account for the emitted CO₂.
//!
//! Modules, bottom-up:
//! - [`registry`]: model profiles, pool CSV and the bundled measured pool.
//! - [`traces`]: carbon-intensity and request-count series and their alignment.
//! - [`feed`]: the three-field JSON intensity sample shared with the live service.
//! - [`selector`]: intensity bounds, the intensity-to-energy mapping and model choice.
//! - [`emissions`]: unit bridge, exact carbon accounting, blended error and CEE.
//! - [`simulator`]: multi-policy replay producing deterministic reports.

pub mod emissions;
pub mod exact;
pub mod feed;
pub mod registry;
pub mod selector;
pub mod simulator;
pub mod time;
pub mod traces;

pub use emissions::{EfficiencyComparison, IntervalEmission, RunSummary, MJ_PER_KWH};
pub use registry::{BuiltinPool, EnergyBounds, ModelPool, ModelProfile};
pub use selector::{BoundsWindow, IntensityBounds, MappingDirection, Policy, SelectionDecision};
pub use simulator::{PolicySpec, SimulationConfig, SimulationReport};
pub use traces::{AlignedTimeline, CarbonTrace, GapPolicy, Interval, RequestTrace};

use sha2::{Digest, Sha256};

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes)
}

pub(crate) fn csv_error_line(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

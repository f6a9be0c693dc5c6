//! Trace replay under several policies on one shared aligned timeline.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emissions::{compare, EfficiencyComparison, EmissionsError, RunAccumulator, RunSummary, MJ_PER_KWH};
use crate::registry::{ModelPool, ModelProfile};
use crate::selector::{fixed_policy, BoundsWindow, MappingDirection, Policy, SelectorError};
use crate::time::format_timestamp;
use crate::traces::{align, AlignError, AlignedTimeline, CarbonTrace, GapPolicy, RequestTrace};

pub const HEURISTIC: &str = "heuristic";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("no policies configured")]
    NoPolicies,
    #[error("duplicate policy `{0}`")]
    DuplicatePolicy(String),
    #[error("baseline `{0}` is not among the configured policies")]
    UnknownBaseline(String),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Selector(#[from] SelectorError),
    #[error(transparent)]
    Emissions(#[from] EmissionsError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    Heuristic,
    Fixed(String),
}

impl PolicySpec {
    pub fn name(&self) -> &str {
        match self {
            PolicySpec::Heuristic => HEURISTIC,
            PolicySpec::Fixed(name) => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub pool: ModelPool,
    /// Human-readable origin of the pool (builtin name or file path).
    pub pool_source: String,
    pub mapping: MappingDirection,
    pub window: BoundsWindow,
    pub gap_policy: GapPolicy,
    pub policies: Vec<PolicySpec>,
    pub baseline: String,
}

impl SimulationConfig {
    /// Heuristic plus one fixed baseline per ResNet model in the pool (every
    /// model when the pool has none), with ResNet50 as CEE baseline when
    /// available.
    pub fn with_defaults(pool: ModelPool, pool_source: impl Into<String>) -> Self {
        let resnets: Vec<&ModelProfile> = pool.profiles().iter().filter(|p| p.name.starts_with("ResNet")).collect();
        let fixed: Vec<String> = if resnets.is_empty() {
            pool.profiles().iter().map(|p| p.name.clone()).collect()
        } else {
            resnets.iter().map(|p| p.name.clone()).collect()
        };
        let baseline = if fixed.iter().any(|n| n == "ResNet50") { "ResNet50".to_string() } else { fixed[0].clone() };
        let mut policies = vec![PolicySpec::Heuristic];
        policies.extend(fixed.into_iter().map(PolicySpec::Fixed));
        Self {
            pool,
            pool_source: pool_source.into(),
            mapping: MappingDirection::Prose,
            window: BoundsWindow::WholeTrace,
            gap_policy: GapPolicy::Strict,
            policies,
            baseline,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub pool_source: String,
    pub pool_sha256: String,
    pub pool: Vec<ModelProfile>,
    pub mapping: MappingDirection,
    pub window: BoundsWindow,
    pub gap_policy: GapPolicy,
    pub policies: Vec<String>,
    pub baseline: String,
}

/// Content digests of the canonicalized input traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigests {
    pub carbon_sha256: String,
    pub requests_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: ConfigEcho,
    pub inputs: InputDigests,
    pub mj_per_kwh: f64,
    pub steps: usize,
    pub summaries: Vec<RunSummary>,
    pub comparisons: Vec<EfficiencyComparison>,
}

impl SimulationReport {
    pub fn summary(&self, policy: &str) -> Option<&RunSummary> {
        self.summaries.iter().find(|s| s.policy == policy)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per (policy, interval), for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("policy,start_utc,end_utc,intensity_g_per_kwh,model,count,energy_mj_total,carbon_g\n");
        for summary in &self.summaries {
            for e in &summary.per_interval {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    summary.policy,
                    format_timestamp(&e.interval.start),
                    format_timestamp(&e.interval.end),
                    e.intensity_g_per_kwh,
                    e.model,
                    e.count,
                    e.energy_mj_total,
                    e.carbon_g
                );
            }
        }
        out
    }
}

fn resolve_policies(config: &SimulationConfig) -> Result<Vec<Policy>, SimError> {
    if config.policies.is_empty() {
        return Err(SimError::NoPolicies);
    }
    let mut names = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(config.policies.len());
    for spec in &config.policies {
        if !names.insert(spec.name()) {
            return Err(SimError::DuplicatePolicy(spec.name().to_string()));
        }
        out.push(match spec {
            PolicySpec::Heuristic => Policy::Heuristic { direction: config.mapping, window: config.window },
            PolicySpec::Fixed(name) => Policy::Fixed(fixed_policy(name, &config.pool)?),
        });
    }
    if !names.contains(config.baseline.as_str()) {
        return Err(SimError::UnknownBaseline(config.baseline.clone()));
    }
    Ok(out)
}

/// Replay one policy over an aligned timeline.
///
/// With a whole-trace window the bounds are the extremes of the full carbon
/// trace, known in advance. With a trailing window each step observes only
/// samples starting at or before the step start.
pub fn replay_policy(
    policy: &Policy,
    timeline: &AlignedTimeline,
    carbon: &CarbonTrace,
    pool: &ModelPool,
) -> Result<RunSummary, SimError> {
    let history = carbon.samples();
    let trace_last_start = history[history.len() - 1].interval.start;
    let mut acc = RunAccumulator::new();
    for step in &timeline.steps {
        let at = match policy {
            Policy::Heuristic { window: BoundsWindow::WholeTrace, .. } => trace_last_start,
            _ => step.interval.start,
        };
        let decision = policy.decide(step.intensity_g_per_kwh, history, at, pool)?;
        let model = pool.get(&decision.model).expect("decision picks a pool member");
        acc.record(step.interval, step.count, model, step.intensity_g_per_kwh);
    }
    Ok(acc.finish(policy.name())?)
}

pub fn run(config: &SimulationConfig, carbon: &CarbonTrace, requests: &RequestTrace) -> Result<SimulationReport, SimError> {
    let policies = resolve_policies(config)?;
    let timeline = align(carbon, requests, config.gap_policy)?;

    let summaries = policies
        .iter()
        .map(|p| replay_policy(p, &timeline, carbon, &config.pool))
        .collect::<Result<Vec<_>, _>>()?;

    let baseline = summaries.iter().find(|s| s.policy == config.baseline).expect("baseline resolved above");
    let comparisons = summaries
        .iter()
        .filter(|s| s.policy != config.baseline)
        .map(|s| {
            compare(
                &baseline.policy,
                &s.policy,
                baseline.blended_error_pct,
                s.blended_error_pct,
                baseline.total_carbon_g,
                s.total_carbon_g,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SimulationReport {
        config: ConfigEcho {
            pool_source: config.pool_source.clone(),
            pool_sha256: config.pool.digest(),
            pool: config.pool.profiles().to_vec(),
            mapping: config.mapping,
            window: config.window,
            gap_policy: config.gap_policy,
            policies: config.policies.iter().map(|p| p.name().to_string()).collect(),
            baseline: config.baseline.clone(),
        },
        inputs: InputDigests { carbon_sha256: carbon.digest(), requests_sha256: requests.digest() },
        mj_per_kwh: MJ_PER_KWH,
        steps: timeline.steps.len(),
        summaries,
        comparisons,
    })
}

/// Independent runs; each config's outcome is reported in order.
pub fn sweep(
    configs: &[SimulationConfig],
    carbon: &CarbonTrace,
    requests: &RequestTrace,
) -> Vec<Result<SimulationReport, SimError>> {
    configs.iter().map(|c| run(c, carbon, requests)).collect()
}

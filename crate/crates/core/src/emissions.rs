//! Carbon accounting, blended error rate and carbon emission efficiency.
//!
//! Grams of CO₂ for one inference are `energy_mj × intensity / MJ_PER_KWH`.
//! Per-interval and total figures are accumulated exactly (see
//! [`crate::exact`]) and rounded once, so totals do not depend on the order
//! or granularity in which requests are accounted.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::ExactSum;
use crate::registry::ModelProfile;
use crate::traces::Interval;

/// Millijoules per kilowatt-hour.
pub const MJ_PER_KWH: f64 = 3.6e9;
const MJ_PER_KWH_INT: u64 = 3_600_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmissionsError {
    #[error("blended error undefined: zero total requests")]
    ZeroRequests,
    #[error("quality improvement undefined: baseline error rate is zero")]
    ZeroBaselineError,
    #[error("CEE undefined: equal carbon totals")]
    CeeUndefined,
}

pub fn grams_per_inference(energy_mj: f64, intensity_g_per_kwh: f64) -> f64 {
    energy_mj * intensity_g_per_kwh / MJ_PER_KWH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalEmission {
    pub interval: Interval,
    pub model: String,
    pub intensity_g_per_kwh: f64,
    pub count: u64,
    pub energy_mj_total: f64,
    pub carbon_g: f64,
}

/// Emission of `count` inferences on `model` at a constant intensity.
pub fn interval_emission(interval: Interval, count: u64, model: &ModelProfile, intensity_g_per_kwh: f64) -> IntervalEmission {
    let mut carbon = ExactSum::new();
    carbon.add_product(count, model.energy_mj, intensity_g_per_kwh);
    let mut energy = ExactSum::new();
    energy.add_product(count, model.energy_mj, 1.0);
    IntervalEmission {
        interval,
        model: model.name.clone(),
        intensity_g_per_kwh,
        count,
        energy_mj_total: energy.to_f64(),
        carbon_g: carbon.to_f64_div(MJ_PER_KWH_INT),
    }
}

/// Request-weighted mean error rate, rounded once from the exact value.
pub fn blended_error<'a, I>(per_interval: I) -> Result<f64, EmissionsError>
where
    I: IntoIterator<Item = (u64, &'a ModelProfile)>,
{
    let mut weighted = ExactSum::new();
    let mut total: u64 = 0;
    for (count, model) in per_interval {
        weighted.add_product(count, model.error_rate_pct, 1.0);
        total += count;
    }
    if total == 0 {
        return Err(EmissionsError::ZeroRequests);
    }
    Ok(weighted.to_f64_div(total))
}

/// Relative error-rate improvement of `candidate` over `baseline`, in percent.
/// Negative when the candidate is worse.
pub fn quality_improvement(baseline_error_pct: f64, candidate_error_pct: f64) -> Result<f64, EmissionsError> {
    if baseline_error_pct == 0.0 {
        return Err(EmissionsError::ZeroBaselineError);
    }
    Ok((baseline_error_pct - candidate_error_pct) / baseline_error_pct * 100.0)
}

/// Quality improvement per gram of additional carbon.
pub fn cee(quality_improvement_pct: f64, delta_carbon_g: f64) -> Result<f64, EmissionsError> {
    if delta_carbon_g == 0.0 {
        return Err(EmissionsError::CeeUndefined);
    }
    Ok(quality_improvement_pct / delta_carbon_g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub total_carbon_g: f64,
    pub total_requests: u64,
    pub blended_error_pct: f64,
    /// Requests served per model.
    pub model_mix: BTreeMap<String, u64>,
    pub per_interval: Vec<IntervalEmission>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyComparison {
    pub baseline: String,
    pub candidate: String,
    pub quality_improvement_pct: f64,
    pub delta_carbon_g: f64,
    /// `None` when the carbon totals are equal and the metric is undefined.
    pub cee: Option<f64>,
}

/// Compare `candidate` against `baseline`. Equal carbon totals yield a
/// comparison whose `cee` is `None`.
pub fn carbon_emission_efficiency(baseline: &RunSummary, candidate: &RunSummary) -> Result<EfficiencyComparison, EmissionsError> {
    compare(
        &baseline.policy,
        &candidate.policy,
        baseline.blended_error_pct,
        candidate.blended_error_pct,
        baseline.total_carbon_g,
        candidate.total_carbon_g,
    )
}

pub fn compare(
    baseline: &str,
    candidate: &str,
    baseline_error_pct: f64,
    candidate_error_pct: f64,
    baseline_carbon_g: f64,
    candidate_carbon_g: f64,
) -> Result<EfficiencyComparison, EmissionsError> {
    let quality_improvement_pct = quality_improvement(baseline_error_pct, candidate_error_pct)?;
    let delta_carbon_g = candidate_carbon_g - baseline_carbon_g;
    Ok(EfficiencyComparison {
        baseline: baseline.to_string(),
        candidate: candidate.to_string(),
        quality_improvement_pct,
        delta_carbon_g,
        cee: cee(quality_improvement_pct, delta_carbon_g).ok(),
    })
}

/// Accumulates one policy's interval emissions into a [`RunSummary`].
#[derive(Debug, Default)]
pub struct RunAccumulator {
    carbon: ExactSum,
    weighted_error: ExactSum,
    total_requests: u64,
    model_mix: BTreeMap<String, u64>,
    per_interval: Vec<IntervalEmission>,
}

impl RunAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, interval: Interval, count: u64, model: &ModelProfile, intensity_g_per_kwh: f64) {
        self.carbon.add_product(count, model.energy_mj, intensity_g_per_kwh);
        self.weighted_error.add_product(count, model.error_rate_pct, 1.0);
        self.total_requests += count;
        *self.model_mix.entry(model.name.clone()).or_default() += count;
        self.per_interval.push(interval_emission(interval, count, model, intensity_g_per_kwh));
    }

    pub fn finish(self, policy: impl Into<String>) -> Result<RunSummary, EmissionsError> {
        if self.total_requests == 0 {
            return Err(EmissionsError::ZeroRequests);
        }
        Ok(RunSummary {
            policy: policy.into(),
            total_carbon_g: self.carbon.to_f64_div(MJ_PER_KWH_INT),
            total_requests: self.total_requests,
            blended_error_pct: self.weighted_error.to_f64_div(self.total_requests),
            model_mix: self.model_mix.into_iter().filter(|(_, n)| *n > 0).collect(),
            per_interval: self.per_interval,
        })
    }
}

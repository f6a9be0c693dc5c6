//! The intensity feed sample: `{"from", "to", "intensity_g_per_kwh"}`.
//!
//! The live service polls bodies of this shape and intensity history can be
//! replayed from files containing them.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::traces::{CarbonSample, Interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensityFeedSample {
    #[serde(with = "crate::time::iso")]
    pub from: DateTime<Utc>,
    #[serde(with = "crate::time::iso")]
    pub to: DateTime<Utc>,
    pub intensity_g_per_kwh: f64,
}

#[derive(Debug, Error)]
pub enum FeedError {
    #[error("malformed feed body: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("negative intensity {0}")]
    NegativeIntensity(f64),
    #[error("non-finite intensity")]
    NonFinite,
    #[error("empty interval: `from` must precede `to`")]
    EmptyInterval,
}

impl IntensityFeedSample {
    pub fn validate(&self) -> Result<(), FeedError> {
        if !self.intensity_g_per_kwh.is_finite() {
            return Err(FeedError::NonFinite);
        }
        if self.intensity_g_per_kwh < 0.0 {
            return Err(FeedError::NegativeIntensity(self.intensity_g_per_kwh));
        }
        if self.from >= self.to {
            return Err(FeedError::EmptyInterval);
        }
        Ok(())
    }

    pub fn to_carbon_sample(&self) -> CarbonSample {
        CarbonSample {
            interval: Interval { start: self.from, end: self.to },
            intensity_g_per_kwh: self.intensity_g_per_kwh,
        }
    }
}

/// Parse and validate one feed body.
pub fn parse_feed_sample(body: &[u8]) -> Result<IntensityFeedSample, FeedError> {
    let sample: IntensityFeedSample = serde_json::from_slice(body)?;
    sample.validate()?;
    Ok(sample)
}

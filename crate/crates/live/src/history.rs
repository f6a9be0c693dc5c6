//! In-memory intensity history shared between the poller and the handlers.

use std::sync::{Arc, RwLock};

use carbonsched::feed::IntensityFeedSample;
use carbonsched::traces::CarbonSample;

/// Samples ordered by `from`, at most one per `from`.
#[derive(Debug, Default, Clone)]
pub struct IntensityHistory {
    samples: Vec<IntensityFeedSample>,
}

impl IntensityHistory {
    /// Insert a sample; returns false (and leaves the history unchanged) when
    /// a sample with the same `from` already exists.
    pub fn insert(&mut self, sample: IntensityFeedSample) -> bool {
        match self.samples.binary_search_by(|s| s.from.cmp(&sample.from)) {
            Ok(_) => false,
            Err(pos) => {
                self.samples.insert(pos, sample);
                true
            }
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latest(&self) -> Option<&IntensityFeedSample> {
        self.samples.last()
    }

    pub fn samples(&self) -> &[IntensityFeedSample] {
        &self.samples
    }

    pub fn carbon_samples(&self) -> Vec<CarbonSample> {
        self.samples.iter().map(|s| s.to_carbon_sample()).collect()
    }
}

/// One writer, many readers. Readers clone a snapshot under the read lock,
/// so they see the history either before or after an insert, never during.
#[derive(Debug, Default, Clone)]
pub struct SharedHistory(Arc<RwLock<IntensityHistory>>);

impl SharedHistory {
    pub fn insert(&self, sample: IntensityFeedSample) -> bool {
        self.0.write().expect("history lock poisoned").insert(sample)
    }

    pub fn snapshot(&self) -> IntensityHistory {
        self.0.read().expect("history lock poisoned").clone()
    }
}

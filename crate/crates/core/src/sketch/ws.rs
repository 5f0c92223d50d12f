use std::collections::HashMap;

use super::hash::HashFamily;
use super::{FrequencyEstimator, SketchError};

/// Fixed-threshold weighted sampling.
///
/// An arriving item of weight `w` enters the sample when `w / tau` exceeds
/// its key's hash-derived uniform draw in `[0, 1)`; in particular any item
/// whose weight is at least `tau` is always sampled. Sampled keys then
/// accumulate their weight exactly. The sample size is unbounded.
#[derive(Debug, Clone)]
pub struct ThresholdSample {
    tau: f64,
    sampled: HashMap<Vec<u8>, f64>,
    hashes: HashFamily,
}

impl ThresholdSample {
    pub fn new(tau: f64, seed: u64) -> Result<Self, SketchError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(SketchError::BadThreshold(tau));
        }
        Ok(ThresholdSample { tau, sampled: HashMap::new(), hashes: HashFamily::new(1, seed) })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.sampled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sampled.is_empty()
    }

    fn draw(&self, key: &[u8]) -> f64 {
        // 53 high-quality bits of the fingerprint mapped into [0, 1)
        let fp = self.hashes.fingerprint(key);
        let mixed = self.hashes.bucket(0, fp, 1 << 53) as f64;
        mixed / (1u64 << 53) as f64
    }

    pub fn add_weighted(&mut self, key: &[u8], weight: f64) {
        if let Some(acc) = self.sampled.get_mut(key) {
            *acc += weight;
            return;
        }
        if weight / self.tau > self.draw(key) {
            self.sampled.insert(key.to_vec(), weight);
        }
    }

    pub fn estimate_weight(&self, key: &[u8]) -> f64 {
        self.sampled.get(key).copied().unwrap_or(0.0)
    }
}

impl FrequencyEstimator for ThresholdSample {
    fn add(&mut self, key: &[u8]) {
        self.add_weighted(key, 1.0);
    }

    fn estimate(&self, key: &[u8]) -> u64 {
        self.estimate_weight(key).round() as u64
    }

    fn reset(&mut self) {
        self.sampled.clear();
    }
}

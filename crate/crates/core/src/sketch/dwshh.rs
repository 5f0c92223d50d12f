use std::collections::HashMap;

use super::hash::HashFamily;
use super::{FrequencyEstimator, SketchError};

#[derive(Debug, Clone, Copy)]
struct Slot {
    count: u64,
    /// Hash-derived tie-breaker; among equal counts the lowest is evicted.
    priority: u64,
}

/// Fixed-size distinct weighted sample for heavy hitters.
///
/// Holds at most `capacity` keys. A key already in the sample accumulates
/// its weight exactly. A new key arriving at a full sample replaces the
/// lowest-priority resident (smallest count, then smallest hash priority)
/// and inherits its count, so any key carrying more than `total/capacity`
/// of the mass is guaranteed to stay resident.
#[derive(Debug, Clone)]
pub struct DistinctWeightedSample {
    capacity: usize,
    slots: HashMap<Vec<u8>, Slot>,
    hashes: HashFamily,
}

impl DistinctWeightedSample {
    pub fn new(capacity: usize, seed: u64) -> Result<Self, SketchError> {
        if capacity == 0 {
            return Err(SketchError::ZeroCapacity);
        }
        Ok(DistinctWeightedSample {
            capacity,
            slots: HashMap::with_capacity(capacity),
            hashes: HashFamily::new(1, seed),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn contains(&self, key: &[u8]) -> bool {
        self.slots.contains_key(key)
    }

    pub fn add_weighted(&mut self, key: &[u8], weight: u64) {
        if let Some(slot) = self.slots.get_mut(key) {
            slot.count += weight;
            return;
        }
        let priority = self.hashes.fingerprint(key);
        let mut count = weight;
        if self.slots.len() == self.capacity {
            let victim = self
                .slots
                .iter()
                .min_by_key(|(_, s)| (s.count, s.priority))
                .map(|(k, s)| (k.clone(), *s))
                .expect("full sample is non-empty");
            self.slots.remove(&victim.0);
            count += victim.1.count;
        }
        self.slots.insert(key.to_vec(), Slot { count, priority });
    }

    /// Resident keys ordered by descending estimate.
    pub fn top(&self) -> Vec<(&[u8], u64)> {
        let mut out: Vec<_> = self.slots.iter().map(|(k, s)| (k.as_slice(), s.count)).collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        out
    }
}

impl FrequencyEstimator for DistinctWeightedSample {
    fn add(&mut self, key: &[u8]) {
        self.add_weighted(key, 1);
    }

    fn estimate(&self, key: &[u8]) -> u64 {
        self.slots.get(key).map_or(0, |s| s.count)
    }

    fn reset(&mut self) {
        self.slots.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn exact_under_capacity() {
        let mut s = DistinctWeightedSample::new(100, 1).unwrap();
        let mut exact = HashMap::new();
        for i in 0..500u32 {
            let k = format!("d{}", i % 10);
            s.add(k.as_bytes());
            *exact.entry(k).or_insert(0u64) += 1;
        }
        assert_eq!(s.len(), 10);
        for (k, c) in exact {
            assert_eq!(s.estimate(k.as_bytes()), c);
        }
    }

    #[test]
    fn retains_dominant_key() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = DistinctWeightedSample::new(10, 2).unwrap();
        let mut heavy_true = 0u64;
        for i in 0..2000 {
            if i % 2 == 0 {
                s.add(b"heavy.com");
                heavy_true += 1;
            } else {
                let k = format!("tail{}.com", rng.gen_range(0..1000));
                s.add(k.as_bytes());
            }
        }
        assert!(s.contains(b"heavy.com"));
        assert!(s.estimate(b"heavy.com") >= heavy_true);
        assert_eq!(s.top()[0].0, b"heavy.com");
    }

    #[test]
    fn never_exceeds_capacity() {
        let mut s = DistinctWeightedSample::new(4, 3).unwrap();
        for i in 0..100 {
            s.add(format!("{i}").as_bytes());
            assert!(s.len() <= 4);
        }
        s.reset();
        assert!(s.is_empty());
        assert!(DistinctWeightedSample::new(0, 0).is_err());
    }
}

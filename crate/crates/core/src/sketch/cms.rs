use std::f64::consts::E;

use super::hash::HashFamily;
use super::{FrequencyEstimator, SketchError};

pub const COUNTER_BYTES: usize = std::mem::size_of::<u32>();

/// Count-Min Sketch with `depth` rows of `width` saturating 32-bit counters.
#[derive(Debug, Clone)]
pub struct CountMinSketch {
    depth: usize,
    width: usize,
    counters: Vec<u32>,
    hashes: HashFamily,
}

impl CountMinSketch {
    pub fn new(depth: usize, width: usize, seed: u64) -> Result<Self, SketchError> {
        if depth == 0 || width == 0 {
            return Err(SketchError::ZeroDimension { depth, width });
        }
        Ok(CountMinSketch { depth, width, counters: vec![0; depth * width], hashes: HashFamily::new(depth, seed) })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Additive error factor: estimates exceed the true count by at most
    /// `epsilon * total` with probability `1 - delta`.
    pub fn epsilon(&self) -> f64 {
        E / self.width as f64
    }

    pub fn delta(&self) -> f64 {
        (-(self.depth as f64)).exp()
    }

    pub fn memory_bytes(&self) -> usize {
        self.counters.len() * COUNTER_BYTES
    }

    pub fn add(&mut self, key: &[u8]) {
        let fp = self.hashes.fingerprint(key);
        for row in 0..self.depth {
            let i = row * self.width + self.hashes.bucket(row, fp, self.width);
            self.counters[i] = self.counters[i].saturating_add(1);
        }
    }

    pub fn estimate(&self, key: &[u8]) -> u32 {
        let fp = self.hashes.fingerprint(key);
        (0..self.depth)
            .map(|row| self.counters[row * self.width + self.hashes.bucket(row, fp, self.width)])
            .min()
            .unwrap_or(0)
    }

    /// Zeroes every counter; hash seeds are kept so replays are identical.
    pub fn reset(&mut self) {
        self.counters.fill(0);
    }

    pub fn is_empty(&self) -> bool {
        self.counters.iter().all(|&c| c == 0)
    }
}

impl FrequencyEstimator for CountMinSketch {
    fn add(&mut self, key: &[u8]) {
        CountMinSketch::add(self, key)
    }

    fn estimate(&self, key: &[u8]) -> u64 {
        CountMinSketch::estimate(self, key) as u64
    }

    fn reset(&mut self) {
        CountMinSketch::reset(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    #[test]
    fn rejects_zero_dimensions() {
        assert!(CountMinSketch::new(0, 10, 1).is_err());
        assert!(CountMinSketch::new(3, 0, 1).is_err());
    }

    #[test]
    fn single_and_repeated_insert() {
        let mut s = CountMinSketch::new(5, 200, 1).unwrap();
        assert_eq!(s.estimate(b"a.com"), 0);
        s.add(b"a.com");
        assert_eq!(s.estimate(b"a.com"), 1);
        for _ in 0..5 {
            s.add(b"a.com");
        }
        assert_eq!(s.estimate(b"a.com"), 6);
        assert_eq!(s.memory_bytes(), 4000);
    }

    #[test]
    fn reset_zeroes_and_replays_identically() {
        let mut s = CountMinSketch::new(4, 100, 9).unwrap();
        let keys: Vec<String> = (0..500).map(|i| format!("k{}", i % 37)).collect();
        for k in &keys {
            s.add(k.as_bytes());
        }
        let first: Vec<u32> = keys.iter().map(|k| s.estimate(k.as_bytes())).collect();
        s.reset();
        assert!(s.is_empty());
        assert_eq!(s.estimate(b"k1"), 0);
        for k in &keys {
            s.add(k.as_bytes());
        }
        let second: Vec<u32> = keys.iter().map(|k| s.estimate(k.as_bytes())).collect();
        assert_eq!(first, second);
    }

    #[test]
    fn saturates_instead_of_wrapping() {
        let mut s = CountMinSketch::new(1, 1, 0).unwrap();
        s.counters[0] = u32::MAX - 1;
        s.add(b"x");
        s.add(b"x");
        assert_eq!(s.estimate(b"x"), u32::MAX);
    }

    #[test]
    fn thousand_distinct_keys_within_bound() {
        let mut s = CountMinSketch::new(5, 200, 3).unwrap();
        let keys: Vec<String> = (0..1000).map(|i| format!("site{i}.example")).collect();
        for k in &keys {
            s.add(k.as_bytes());
        }
        let bound = 1.0 + s.epsilon() * 1000.0;
        let over = keys.iter().filter(|k| s.estimate(k.as_bytes()) as f64 > bound).count();
        for k in &keys {
            assert!(s.estimate(k.as_bytes()) >= 1);
        }
        // each key may exceed the bound with probability at most delta
        assert!((over as f64) <= 1000.0 * s.delta() * 3.0, "{over} keys over bound");
    }

    #[test]
    fn adversarial_load_mean_overestimate() {
        // 10,000 inserts into w=100 over a skewed key set; the mean
        // overestimate must stay well within e/w * total.
        let mut s = CountMinSketch::new(3, 100, 11).unwrap();
        let mut exact: HashMap<String, u32> = HashMap::new();
        for i in 0..10_000u32 {
            let k = format!("k{}", (i * 7919) % 1500 % (1 + i % 400));
            s.add(k.as_bytes());
            *exact.entry(k).or_default() += 1;
        }
        let mut over: Vec<f64> = exact.iter().map(|(k, &c)| (s.estimate(k.as_bytes()) - c) as f64).collect();
        over.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let bound = s.epsilon() * 10_000.0;
        let mean = over.iter().sum::<f64>() / over.len() as f64;
        let p95 = over[over.len() * 95 / 100];
        assert!(mean <= bound, "mean {mean} > {bound}");
        assert!(p95 <= bound, "p95 {p95} > {bound}");
    }

    proptest! {
        #[test]
        fn never_underestimates(
            stream in prop::collection::vec(0u16..300, 0..2000),
            depth in 1usize..6,
            width in 1usize..64,
            seed: u64,
        ) {
            let mut s = CountMinSketch::new(depth, width, seed).unwrap();
            let mut exact: HashMap<u16, u32> = HashMap::new();
            for k in &stream {
                s.add(&k.to_be_bytes());
                *exact.entry(*k).or_default() += 1;
            }
            for (k, c) in exact {
                prop_assert!(s.estimate(&k.to_be_bytes()) >= c);
            }
        }
    }
}

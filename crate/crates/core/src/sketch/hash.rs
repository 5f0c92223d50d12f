use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MERSENNE_61: u64 = (1 << 61) - 1;

/// Seeds for one sketch row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowSeed {
    mul: u128,
    add: u128,
}

/// Seeded hash family: a polynomial fingerprint over the key bytes modulo
/// 2^61-1, followed by a per-row multiply-add-shift on the 64-bit
/// fingerprint (2-independent for distinct fingerprints), reduced to
/// `[0, width)` by a multiply-high.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    base: u64,
    rows: Vec<RowSeed>,
}

impl HashFamily {
    pub fn new(rows: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = rng.gen_range(1u64 << 32..MERSENNE_61);
        let rows = (0..rows).map(|_| RowSeed { mul: rng.gen::<u128>() | 1, add: rng.gen() }).collect();
        HashFamily { base, rows }
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn fingerprint(&self, key: &[u8]) -> u64 {
        let mut h: u64 = key.len() as u64;
        for &b in key {
            h = mul_mod_61(h, self.base);
            h = add_mod_61(h, b as u64 + 1);
        }
        h
    }

    /// Bucket of a precomputed fingerprint in `row`.
    pub fn bucket(&self, row: usize, fingerprint: u64, width: usize) -> usize {
        let seed = self.rows[row];
        let h = (seed.mul.wrapping_mul(fingerprint as u128).wrapping_add(seed.add) >> 64) as u64;
        ((h as u128 * width as u128) >> 64) as usize
    }
}

fn mul_mod_61(a: u64, b: u64) -> u64 {
    let p = a as u128 * b as u128;
    let lo = (p as u64) & MERSENNE_61;
    let hi = (p >> 61) as u64;
    add_mod_61(lo, hi)
}

fn add_mod_61(a: u64, b: u64) -> u64 {
    let s = a + b;
    let s = (s & MERSENNE_61) + (s >> 61);
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod_arith_matches_u128() {
        let xs = [0, 1, 12345, MERSENNE_61 - 1, 1 << 60, 0x1234_5678_9abc];
        for &a in &xs {
            for &b in &xs {
                let want = ((a as u128 * b as u128) % MERSENNE_61 as u128) as u64;
                assert_eq!(mul_mod_61(a % MERSENNE_61, b % MERSENNE_61), want);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = HashFamily::new(3, 7);
        let b = HashFamily::new(3, 7);
        let c = HashFamily::new(3, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let f = a.fingerprint(b"victim.com");
        assert_eq!(f, b.fingerprint(b"victim.com"));
        assert_ne!(f, a.fingerprint(b"victim.co"));
        for row in 0..3 {
            assert!(a.bucket(row, f, 200) < 200);
        }
    }

    #[test]
    fn buckets_are_roughly_uniform() {
        let fam = HashFamily::new(1, 42);
        let width = 50;
        let mut counts = vec![0u32; width];
        let n = 50_000;
        for i in 0..n {
            let key = format!("domain-{i}.example");
            counts[fam.bucket(0, fam.fingerprint(key.as_bytes()), width)] += 1;
        }
        let expect = n as f64 / width as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
        // 49 degrees of freedom; 99.9th percentile is about 85
        assert!(chi2 < 85.0, "chi2 = {chi2}");
    }
}

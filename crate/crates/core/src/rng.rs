//! Seeded pseudorandom generation for reproducible experiments.
//!
//! The generator is a plain splitmix64 ("splitmix64-v1" in run manifests).
//! It is hand-rolled so that seeded trials stay reproducible forever,
//! independent of external crate versions.

pub const GENERATOR_NAME: &str = "splitmix64-v1";

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi] (inclusive). Uses rejection to stay unbiased.
    pub fn gen_range_u64(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        let span = hi - lo + 1;
        if span == 0 {
            return self.next_u64(); // full range
        }
        let zone = u64::MAX - (u64::MAX % span);
        loop {
            let v = self.next_u64();
            if v < zone {
                return lo + v % span;
            }
        }
    }

    /// Uniform in [-hi, -lo] U [lo, hi], for nonzero shifts.
    pub fn gen_signed_nonzero(&mut self, lo: u64, hi: u64) -> i64 {
        let mag = self.gen_range_u64(lo.max(1), hi) as i64;
        if self.next_u64() & 1 == 0 {
            mag
        } else {
            -mag
        }
    }
}

//! Compensated floating-point accumulation.
//!
//! All multi-term reductions in the crate go through [`Accumulator`] so that
//! identity checks hold to ~1e-12 relative error even over millions of terms,
//! and so that parallel map + ordered sequential reduce reproduces the purely
//! sequential result bit for bit.

/// Neumaier-compensated sum. Unlike plain Kahan it also tracks the error
/// when the incoming term is larger than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    compensation: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = Accumulator::new();
    for v in iter {
        acc.add(v);
    }
    acc.value()
}

//! Exact fractions reduced modulo 1.
//!
//! Phases of exponential sums are carried as rationals num/den with
//! 0 <= num < den, reduced to lowest terms, and only converted to a
//! trigonometric value at the very end. Arithmetic is i128 throughout, which
//! covers every desk-scale denominator product the reciprocity chains build.

use crate::util::{unit_phase, Complex64};
use std::fmt;
use std::ops::{Add, Neg, Sub};

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A rational residue modulo 1: value num/den with 0 <= num < den and
/// gcd(num, den) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitFraction {
    num: i128,
    den: i128,
}

impl UnitFraction {
    pub const ZERO: UnitFraction = UnitFraction { num: 0, den: 1 };

    /// Reduce num/den mod 1. `den` may be negative; the sign moves to the
    /// numerator before reduction.
    pub fn new(mut num: i128, mut den: i128) -> Self {
        assert!(den != 0, "unit fraction with zero denominator");
        if den < 0 {
            num = -num;
            den = -den;
        }
        num = num.rem_euclid(den);
        let g = gcd_i128(num, den).max(1);
        Self { num: num / g, den: den / g }
    }

    pub fn num(&self) -> i128 {
        self.num
    }

    pub fn den(&self) -> i128 {
        self.den
    }

    /// The fraction as a float in [0, 1).
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// e(num/den) = exp(2 pi i num/den).
    pub fn phase(&self) -> Complex64 {
        unit_phase(self.value())
    }
}

impl fmt::Display for UnitFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_mod_one() {
        assert_eq!(UnitFraction::new(16, 15), UnitFraction::new(1, 15));
        assert_eq!(UnitFraction::new(-1, 3), UnitFraction::new(2, 3));
        assert_eq!(UnitFraction::new(4, -6), UnitFraction::new(1, 3));
        assert_eq!(UnitFraction::new(7, 7), UnitFraction::ZERO);
    }

    #[test]
    fn arithmetic() {
        let a = UnitFraction::new(2, 5);
        let b = UnitFraction::new(2, 3);
        assert_eq!(a.add(b), UnitFraction::new(1, 15));
        assert_eq!(a.sub(a), UnitFraction::ZERO);
        assert_eq!(a.neg().add(a), UnitFraction::ZERO);
    }

    #[test]
    fn random_add_associativity() {
        let mut rng = crate::rng::SplitMix64::new(3);
        for _ in 0..20_000 {
            let f = |rng: &mut crate::rng::SplitMix64| {
                let den = rng.gen_range_u64(1, 1_000_000) as i128;
                let num = rng.gen_range_u64(0, 2_000_000) as i128 - 1_000_000;
                UnitFraction::new(num, den)
            };
            let (a, b, c) = (f(&mut rng), f(&mut rng), f(&mut rng));
            assert_eq!(a.add(b).add(c), a.add(b.add(c)));
        }
    }
}

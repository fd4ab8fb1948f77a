//! Exact exponential sums: complete Kloosterman sums against the Weil
//! bound, weighted short Kloosterman sums, Bezout reciprocity and the
//! two-step Kloosterman-fraction factorization, and trilinear forms in
//! Kloosterman fractions.
//!
//! Every phase is carried as an exact rational modulo 1 and only becomes a
//! complex number at the last step, so identity checks are exact up to the
//! final trigonometric evaluation.

use crate::error::{Error, Result};
use crate::exec::{map_collect, map_collect_seq};
use crate::rational::UnitFraction;
use crate::tables::{euler_phi, gcd, gcd_i64, mod_inverse, tau2};
use crate::util::{Complex64, ComplexAccumulator};

/// Table of e(k/c) for k in [0, c) plus inverses of the units mod c.
/// Shared across a sweep so the per-term work is integer arithmetic and a
/// lookup.
struct ModulusTables {
    c: u64,
    phases: Vec<Complex64>,
    inverses: Vec<Option<u64>>,
}

impl ModulusTables {
    fn new(c: u64) -> Self {
        let phases = (0..c)
            .map(|k| crate::util::unit_phase(k as f64 / c as f64))
            .collect();
        let inverses = (0..c).map(|x| mod_inverse(x as i64, c).ok()).collect();
        Self { c, phases, inverses }
    }

    fn kloosterman(&self, a: u64, b: u64) -> Complex64 {
        let c = self.c;
        if c == 1 {
            return Complex64::ONE;
        }
        let mut acc = ComplexAccumulator::new();
        for x in 1..c {
            if let Some(x_inv) = self.inverses[x as usize] {
                let angle = (a as u128 * x as u128 + b as u128 * x_inv as u128) % c as u128;
                acc.add(self.phases[angle as usize]);
            }
        }
        acc.value()
    }
}

/// S(a, b; c) = sum_{x mod c, (x,c)=1} e((a x + b x^-1)/c), exactly.
pub fn kloosterman(a: i64, b: i64, c: u64) -> Result<Complex64> {
    if c == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    let tables = ModulusTables::new(c);
    let a_red = a.rem_euclid(c as i64) as u64;
    let b_red = b.rem_euclid(c as i64) as u64;
    Ok(tables.kloosterman(a_red, b_red))
}

/// |S(a,b;c)| divided by the Weil bound tau_2(c) (a,b,c)^{1/2} c^{1/2}.
/// Always at most 1.
pub fn weil_ratio(a: i64, b: i64, c: u64) -> Result<f64> {
    let s = kloosterman(a, b, c)?;
    Ok(s.norm() / weil_bound(a, b, c))
}

fn weil_bound(a: i64, b: i64, c: u64) -> f64 {
    let g = gcd(gcd_i64(a, c), gcd_i64(b, c)).max(1);
    tau2(c) as f64 * (g as f64).sqrt() * (c as f64).sqrt()
}

/// Worst case of the Weil ratio over all (a, b) in [0, c)^2 for one modulus.
#[derive(Debug, Clone, Copy)]
pub struct WeilSweepRow {
    pub c: u64,
    pub max_ratio: f64,
    pub argmax_a: u64,
    pub argmax_b: u64,
}

/// Exhaustive Weil-bound sweep over all residue pairs for every modulus in
/// [1, c_max]. Parallel over moduli.
pub fn weil_sweep(c_max: u64) -> Vec<WeilSweepRow> {
    let moduli: Vec<u64> = (1..=c_max).collect();
    map_collect(&moduli, |&c| weil_sweep_one(c))
}

/// Sequential mirror of [`weil_sweep`].
pub fn weil_sweep_seq(c_max: u64) -> Vec<WeilSweepRow> {
    let moduli: Vec<u64> = (1..=c_max).collect();
    map_collect_seq(&moduli, |&c| weil_sweep_one(c))
}

fn weil_sweep_one(c: u64) -> WeilSweepRow {
    let tables = ModulusTables::new(c);
    let mut best = WeilSweepRow { c, max_ratio: 0.0, argmax_a: 0, argmax_b: 0 };
    for a in 0..c.max(1) {
        for b in 0..c.max(1) {
            let ratio = tables.kloosterman(a, b).norm() / weil_bound(a as i64, b as i64, c);
            if ratio > best.max_ratio {
                best = WeilSweepRow { c, max_ratio: ratio, argmax_a: a, argmax_b: b };
            }
        }
    }
    best
}

/// Weighted short Kloosterman sum over an interval:
/// value = sum_{n in [lo, hi], (n, ab) = 1} (n/phi(n)) e(l n^-1 / a),
/// with the monitored ratio |value| / ((l,a)^{1/2} a^{1/2 + 0.1}).
#[derive(Debug, Clone, Copy)]
pub struct ShortKloosterman {
    pub value: Complex64,
    pub bound_ratio: f64,
    pub terms: u64,
}

/// Reported reference exponent in the short-sum monitor: a^{1/2 + EPS0}.
pub const SHORT_SUM_EPS0: f64 = 0.1;

pub fn short_kloosterman_weighted(
    lo: u64,
    hi: u64,
    ell: i64,
    a: u64,
    b: u64,
) -> Result<ShortKloosterman> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidInput("moduli must be positive".into()));
    }
    if lo < 1 || hi > a || lo > hi {
        return Err(Error::InvalidInput(format!(
            "interval [{lo}, {hi}] escapes [1, {a}]"
        )));
    }
    let mut acc = ComplexAccumulator::new();
    let mut terms = 0;
    let ab = a.checked_mul(b).ok_or(Error::InvalidInput("a*b overflows".into()))?;
    for n in lo..=hi {
        if gcd(n, ab) != 1 {
            continue;
        }
        let n_inv = mod_inverse(n as i64, a)?;
        let phase = UnitFraction::new(ell as i128 * n_inv as i128, a as i128).phase();
        let weight = n as f64 / euler_phi(n) as f64;
        acc.add(phase.scale(weight));
        terms += 1;
    }
    let value = acc.value();
    let g = gcd_i64(ell, a) as f64;
    let reference = g.sqrt() * (a as f64).powf(0.5 + SHORT_SUM_EPS0);
    Ok(ShortKloosterman { value, bound_ratio: value.norm() / reference, terms })
}

/// Bezout reciprocity for coprime m, n:
/// a m^-1(n)/n = -a n^-1(m)/m + a/(mn)  (mod 1).
#[derive(Debug, Clone, Copy)]
pub struct BezoutCheck {
    pub lhs: UnitFraction,
    pub rhs1: UnitFraction,
    pub rhs2: UnitFraction,
    pub exact_match: bool,
}

pub fn bezout_reciprocity(a: i64, m: u64, n: u64) -> Result<BezoutCheck> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("moduli must be positive".into()));
    }
    let g = gcd(m, n);
    if g != 1 {
        return Err(Error::InvalidInput(format!("gcd({m}, {n}) = {g}, need coprime")));
    }
    let m_inv = mod_inverse(m as i64, n)?;
    let n_inv = mod_inverse(n as i64, m)?;
    let lhs = UnitFraction::new(a as i128 * m_inv as i128, n as i128);
    let rhs1 = UnitFraction::new(-(a as i128) * n_inv as i128, m as i128);
    let rhs2 = UnitFraction::new(a as i128, m as i128 * n as i128);
    Ok(BezoutCheck { lhs, rhs1, rhs2, exact_match: lhs == rhs1.add(rhs2) })
}

/// Residue data determining the xi factor of the fraction factorization:
/// the classes of (a, h, r, nu1', nu2) mod d*d1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XiClass {
    pub d: u64,
    pub d1: u64,
    pub residues: [u64; 5],
}

impl XiClass {
    pub fn modulus(&self) -> u64 {
        self.d * self.d1
    }

    /// Recompute the xi fraction from the stored residues alone. Possible
    /// whenever (r, d d1) = 1, since then q = (d1 nu1' - nu2)/r is itself
    /// determined mod d d1.
    pub fn xi_from_residues(&self) -> Option<UnitFraction> {
        let dd1 = self.modulus();
        if dd1 == 1 {
            return Some(UnitFraction::ZERO);
        }
        let [a, h, r, nu1p, nu2] = self.residues;
        if gcd(r, dd1) != 1 {
            return None;
        }
        let r_inv = mod_inverse(r as i64, dd1).ok()?;
        let q_mod = (self.d1 as u128 * nu1p as u128 + (dd1 as u128 * dd1 as u128)
            - nu2 as u128) as i128
            * r_inv as i128;
        let q_mod = (q_mod % dd1 as i128).rem_euclid(dd1 as i128) as u64;
        let q_nu1p = (q_mod as u128 * nu1p as u128 % dd1 as u128) as u64;
        let inv = mod_inverse(q_nu1p as i64, dd1).ok()?;
        Some(UnitFraction::new(
            -(a as i128) * h as i128 * inv as i128,
            dd1 as i128,
        ))
    }
}

/// The two-step reciprocity chain for the phase a h (d d1 nu1')^-1 / q with
/// q = (d1 nu1' - nu2)/r:
///
///   original = xi + a h r / (d d1 nu1' (d1 nu1' - nu2))
///                 + a h r (d d1 nu2)^-1 (mod nu1') / nu1'   (mod 1),
///
/// where xi depends only on the residues of (a, h, r, nu1', nu2) mod d d1.
#[derive(Debug, Clone)]
pub struct FractionFactorization {
    pub q: u64,
    pub original: UnitFraction,
    pub pieces: [UnitFraction; 3],
    pub xi_class: XiClass,
    pub exact_match: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn kloosterman_fraction_factorization(
    a: i64,
    h: i64,
    r: i64,
    d: u64,
    d1: u64,
    nu1p: u64,
    nu2: u64,
) -> Result<FractionFactorization> {
    if d == 0 || d1 == 0 || nu1p == 0 || nu2 == 0 || r == 0 {
        return Err(Error::InvalidInput("all moduli must be positive, r nonzero".into()));
    }
    // admissibility: the three divisibility conditions of the decomposition
    let g = gcd(d1 * nu1p, nu2);
    if g != 1 {
        return Err(Error::InvalidInput(format!("gcd(d1 nu1', nu2) = {g}, need 1")));
    }
    let g = gcd(nu1p, d);
    if g != 1 {
        return Err(Error::InvalidInput(format!("gcd(nu1', d) = {g}, need 1")));
    }
    // d1 | d^infinity: peeling gcds must exhaust d1
    let mut x = d1;
    loop {
        let g = gcd(x, d);
        if g == 1 {
            break;
        }
        x /= g;
    }
    if x != 1 {
        return Err(Error::InvalidInput(format!("d1 = {d1} not supported on primes of d = {d}")));
    }
    let diff = d1 as i128 * nu1p as i128 - nu2 as i128;
    if diff == 0 || diff % r as i128 != 0 {
        return Err(Error::InvalidInput(format!(
            "r = {r} does not divide d1 nu1' - nu2 = {diff}"
        )));
    }
    let q_signed = diff / r as i128;
    if q_signed <= 0 {
        return Err(Error::InvalidInput(format!(
            "q = (d1 nu1' - nu2)/r = {q_signed} must be positive"
        )));
    }
    let q = q_signed as u64;
    let g = gcd(
        d.checked_mul(d1)
            .and_then(|v| v.checked_mul(nu1p))
            .and_then(|v| v.checked_mul(r.unsigned_abs()))
            .ok_or(Error::InvalidInput("d d1 nu1' r overflows".into()))?,
        diff.unsigned_abs() as u64,
    );
    if g != r.unsigned_abs() {
        return Err(Error::InvalidInput(format!(
            "gcd(d d1 nu1' r, d1 nu1' - nu2) = {g}, need exactly |r| = {}",
            r.unsigned_abs()
        )));
    }

    let dd1 = d * d1;
    let w = dd1 * nu1p;
    let ah = a as i128 * h as i128;

    // original phase: a h (d d1 nu1')^-1 mod q, over q
    let w_inv_q = mod_inverse(w as i64, q)?;
    let original = UnitFraction::new(ah * w_inv_q as i128, q as i128);

    // first reciprocity: original = -a h q^-1 / w + a h / (w q); then the
    // split of w = (d d1) * nu1' sends -a h q^-1/w to the xi piece mod d d1
    // plus the piece mod nu1', where q^-1 = -r nu2^-1 (mod nu1')
    let xi_piece = if dd1 == 1 {
        UnitFraction::ZERO
    } else {
        let q_nu1p_inv = mod_inverse((q as u128 * nu1p as u128 % dd1 as u128) as i64, dd1)?;
        UnitFraction::new(-ah * q_nu1p_inv as i128, dd1 as i128)
    };
    let middle = UnitFraction::new(ah * r as i128, dd1 as i128 * nu1p as i128 * diff);
    let last = if nu1p == 1 {
        UnitFraction::ZERO
    } else {
        let dd1nu2_inv = mod_inverse((dd1 as u128 * nu2 as u128 % nu1p as u128) as i64, nu1p)?;
        UnitFraction::new(ah * r as i128 * dd1nu2_inv as i128, nu1p as i128)
    };

    let reassembled = xi_piece.add(middle).add(last);
    let xi_class = XiClass {
        d,
        d1,
        residues: [
            a.rem_euclid(dd1 as i64) as u64,
            h.rem_euclid(dd1 as i64) as u64,
            r.rem_euclid(dd1 as i64) as u64,
            nu1p % dd1,
            nu2 % dd1,
        ],
    };
    Ok(FractionFactorization {
        q,
        original,
        pieces: [xi_piece, middle, last],
        xi_class,
        exact_match: original == reassembled,
    })
}

/// A trilinear form in Kloosterman fractions:
/// sum_{a ~ A} sum_{m ~ M} sum_{n ~ N, (m,n)=1}
///   alpha(m) beta(n) nu(a) e(theta a m^-1 / n).
///
/// Coefficient vectors are indexed from their scale: nu on [A, 2A),
/// alpha on [M, 2M), beta on [N, 2N).
#[derive(Debug, Clone)]
pub struct TrilinearInstance {
    pub theta: i64,
    pub a_scale: u64,
    pub nu: Vec<f64>,
    pub m_scale: u64,
    pub alpha: Vec<f64>,
    pub n_scale: u64,
    pub beta: Vec<f64>,
}

impl TrilinearInstance {
    pub fn validate(&self) -> Result<()> {
        if self.theta == 0 {
            return Err(Error::InvalidInput("theta must be nonzero".into()));
        }
        if self.a_scale == 0 || self.m_scale == 0 || self.n_scale == 0 {
            return Err(Error::InvalidInput("scales must be positive".into()));
        }
        if self.nu.len() != self.a_scale as usize
            || self.alpha.len() != self.m_scale as usize
            || self.beta.len() != self.n_scale as usize
        {
            return Err(Error::InvalidInput(
                "coefficient vectors must cover their dyadic supports".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one trilinear evaluation. `reference_bound` is the trilinear
/// cancellation bound with unit constant and eps = 0.05 on plain l2 norms;
/// `reference_bound_mean` uses mean-normalised norms (the alternative norm
/// reading), i.e. the same expression divided by sqrt(A M N).
#[derive(Debug, Clone, Copy)]
pub struct TrilinearResult {
    pub value: Complex64,
    pub reference_bound: f64,
    pub reference_bound_mean: f64,
    pub ratio: f64,
    pub trivial_bound: f64,
    pub skipped_pairs: u64,
}

/// Reported exponent shift in the reference bound.
pub const TRILINEAR_EPS: f64 = 0.05;

pub fn trilinear_form(inst: &TrilinearInstance) -> Result<TrilinearResult> {
    inst.validate()?;
    let rows: Vec<u64> = (inst.a_scale..2 * inst.a_scale).collect();
    let per_a: Vec<(Complex64, u64)> = map_collect(&rows, |&a_val| {
        trilinear_row(inst, a_val).expect("validated instance")
    });
    assemble_trilinear(inst, per_a)
}

fn trilinear_row(inst: &TrilinearInstance, a_val: u64) -> Result<(Complex64, u64)> {
    let nu_coeff = inst.nu[(a_val - inst.a_scale) as usize];
    let mut acc = ComplexAccumulator::new();
    let mut skipped = 0u64;
    for n in inst.n_scale..2 * inst.n_scale {
        let beta_coeff = inst.beta[(n - inst.n_scale) as usize];
        for m in inst.m_scale..2 * inst.m_scale {
            if gcd(m, n) != 1 {
                skipped += 1;
                continue;
            }
            let alpha_coeff = inst.alpha[(m - inst.m_scale) as usize];
            let weight = nu_coeff * alpha_coeff * beta_coeff;
            if weight == 0.0 {
                continue;
            }
            let m_inv = mod_inverse(m as i64, n)?;
            let phase = UnitFraction::new(
                inst.theta as i128 * a_val as i128 * m_inv as i128,
                n as i128,
            )
            .phase();
            acc.add(phase.scale(weight));
        }
    }
    Ok((acc.value(), skipped))
}

fn assemble_trilinear(
    inst: &TrilinearInstance,
    per_a: Vec<(Complex64, u64)>,
) -> Result<TrilinearResult> {
    let mut total = ComplexAccumulator::new();
    let mut skipped = 0u64;
    for (row, sk) in per_a {
        total.add(row);
        skipped += sk;
    }
    let value = total.value();

    let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let a_f = inst.a_scale as f64;
    let m_f = inst.m_scale as f64;
    let n_f = inst.n_scale as f64;
    let amn = a_f * m_f * n_f;
    let shape = (1.0 + inst.theta.unsigned_abs() as f64 * a_f / (m_f * n_f)).sqrt()
        * (amn.powf(7.0 / 20.0 + TRILINEAR_EPS) * (m_f + n_f).powf(0.25)
            + amn.powf(3.0 / 8.0 + TRILINEAR_EPS) * (a_f * m_f + a_f * n_f).powf(0.125));
    let norms = l2(&inst.nu) * l2(&inst.alpha) * l2(&inst.beta);
    let reference_bound = norms * shape;
    let trivial_bound = l1(&inst.nu) * l1(&inst.alpha) * l1(&inst.beta);
    Ok(TrilinearResult {
        value,
        reference_bound,
        reference_bound_mean: reference_bound / amn.sqrt(),
        ratio: if reference_bound == 0.0 { 0.0 } else { value.norm() / reference_bound },
        trivial_bound,
        skipped_pairs: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::util::unit_phase;

    #[test]
    fn kloosterman_hand_values() {
        // S(0,0;c) = phi(c)
        for c in 1..=30u64 {
            let s = kloosterman(0, 0, c).unwrap();
            assert!((s.re - euler_phi(c) as f64).abs() < 1e-12);
            assert!(s.im.abs() < 1e-12);
        }
        // S(1,1;2): single term x = 1, e(1) = 1
        let s = kloosterman(1, 1, 2).unwrap();
        assert!((s.re - 1.0).abs() < 1e-12 && s.im.abs() < 1e-12);
        // S(1,1;5) = 2 + 2 cos(4 pi / 5)
        let s = kloosterman(1, 1, 5).unwrap();
        let expected = 2.0 + 2.0 * (4.0 * std::f64::consts::PI / 5.0).cos();
        assert!((s.re - expected).abs() < 1e-12, "{} vs {expected}", s.re);
        assert!(s.im.abs() < 1e-12);
        assert!((expected - 0.381966).abs() < 1e-6);
    }

    #[test]
    fn kloosterman_brute_force() {
        // independent oracle: inverse by search, phase by float angle
        let mut rng = SplitMix64::new(31);
        for _ in 0..25 {
            let c = rng.gen_range_u64(1, 60);
            let a = rng.gen_range_u64(0, 400) as i64 - 200;
            let b = rng.gen_range_u64(0, 400) as i64 - 200;
            let fast = kloosterman(a, b, c).unwrap();
            let mut slow = Complex64::ZERO;
            for x in 0..c {
                if gcd(x, c) != 1 {
                    continue;
                }
                let x_inv = (0..c).find(|&y| (x * y) % c == 1 % c).unwrap();
                let angle = (a as f64 * x as f64 + b as f64 * x_inv as f64) / c as f64;
                slow += unit_phase(angle);
            }
            assert!(
                (fast - slow).norm() <= 1e-9 * slow.norm().max(1.0),
                "c = {c}, a = {a}, b = {b}"
            );
        }
    }

    #[test]
    fn weil_examples() {
        // (0,0,c): phi(c) / (tau2(c) c) <= 1
        for c in 1..=200u64 {
            let r = weil_ratio(0, 0, c).unwrap();
            assert!(r <= 1.0 + 1e-12, "c = {c}: {r}");
        }
        // (1,1,5): 0.381966 / (2 sqrt(5))
        let r = weil_ratio(1, 1, 5).unwrap();
        assert!((r - 0.381966 / (2.0 * 5f64.sqrt())).abs() < 1e-6);
        // Ramanujan-type (1,0,7)
        let r = weil_ratio(1, 0, 7).unwrap();
        assert!(r <= 1.0);
    }

    #[test]
    fn weil_sweep_small_exhaustive() {
        for row in weil_sweep(60) {
            assert!(row.max_ratio <= 1.0 + 1e-12, "c = {}: {}", row.c, row.max_ratio);
        }
        // parallel/sequential mirrors agree
        let par = weil_sweep(40);
        let seq = weil_sweep_seq(40);
        for (p, s) in par.iter().zip(&seq) {
            assert_eq!(p.max_ratio.to_bits(), s.max_ratio.to_bits());
            assert_eq!((p.argmax_a, p.argmax_b), (s.argmax_a, s.argmax_b));
        }
    }

    #[test]
    fn short_sum_examples() {
        // single term n = 1: value = e(l/a)
        let s = short_kloosterman_weighted(1, 1, 3, 10, 1).unwrap();
        let expected = unit_phase(0.3);
        assert!((s.value - expected).norm() < 1e-12);
        assert_eq!(s.terms, 1);
        // a = 10, b = 1, l = 1, full interval: terms n in {1, 3, 7, 9}
        let s = short_kloosterman_weighted(1, 10, 1, 10, 1).unwrap();
        assert_eq!(s.terms, 4);
        let mut expected = Complex64::ZERO;
        for (n, n_inv) in [(1u64, 1u64), (3, 7), (7, 3), (9, 9)] {
            let w = n as f64 / euler_phi(n) as f64;
            expected += unit_phase(n_inv as f64 / 10.0).scale(w);
        }
        assert!((s.value - expected).norm() < 1e-12);
        // l = 0: all phases 1, positive real sum
        let s = short_kloosterman_weighted(1, 10, 0, 10, 1).unwrap();
        assert!(s.value.im.abs() < 1e-12 && s.value.re > 0.0);
        // interval escape rejected
        assert!(short_kloosterman_weighted(1, 11, 0, 10, 1).is_err());
    }

    #[test]
    fn bezout_hand_check() {
        // a=1, m=3, n=5: 2/5 + 2/3 = 16/15 = 1/15 = 1/(3*5) mod 1
        let chk = bezout_reciprocity(1, 3, 5).unwrap();
        assert!(chk.exact_match);
        assert_eq!(chk.lhs, UnitFraction::new(2, 5));
        assert_eq!(chk.rhs2, UnitFraction::new(1, 15));
        let chk = bezout_reciprocity(7, 4, 9).unwrap();
        assert!(chk.exact_match);
        let chk = bezout_reciprocity(0, 4, 9).unwrap();
        assert!(chk.exact_match);
        assert_eq!(chk.lhs, UnitFraction::ZERO);
        assert!(bezout_reciprocity(1, 6, 9).is_err());
    }

    #[test]
    fn bezout_randomised_large() {
        let mut rng = SplitMix64::new(41);
        for _ in 0..20_000 {
            let m = rng.gen_range_u64(1, 1_000_000_000);
            let n = rng.gen_range_u64(1, 1_000_000_000);
            if gcd(m, n) != 1 {
                continue;
            }
            let a = rng.gen_signed_nonzero(1, 1_000_000);
            let chk = bezout_reciprocity(a, m, n).unwrap();
            assert!(chk.exact_match, "a = {a}, m = {m}, n = {n}");
        }
    }

    #[test]
    fn factorization_degenerate_moduli() {
        // d = d1 = 1: xi trivial, chain is plain double reciprocity
        let f = kloosterman_fraction_factorization(1, 1, 1, 1, 1, 5, 3).unwrap();
        assert_eq!(f.q, 2);
        assert!(f.exact_match);
        assert_eq!(f.pieces[0], UnitFraction::ZERO);
        assert_eq!(f.xi_class.xi_from_residues(), Some(UnitFraction::ZERO));
    }

    #[test]
    fn factorization_rejects_bad_inputs() {
        // gcd(d1 nu1', nu2) > 1
        assert!(kloosterman_fraction_factorization(1, 1, 1, 1, 1, 6, 3).is_err());
        // d1 not supported on primes of d
        assert!(kloosterman_fraction_factorization(1, 1, 1, 2, 3, 5, 7).is_err());
        // r does not divide the difference
        assert!(kloosterman_fraction_factorization(1, 1, 3, 1, 1, 5, 3).is_err());
        // q negative
        assert!(kloosterman_fraction_factorization(1, 1, 1, 1, 1, 2, 5).is_err());
    }

    /// Generate an admissible tuple with (r, d d1) = 1.
    fn random_admissible(rng: &mut SplitMix64) -> (i64, i64, i64, u64, u64, u64, u64) {
        loop {
            let d = rng.gen_range_u64(1, 6);
            let d1 = match d {
                1 => 1,
                _ => {
                    // a product of primes of d
                    let mut v = 1u64;
                    for _ in 0..rng.gen_range_u64(0, 2) {
                        let (p, _) = crate::tables::factorize(d)[0];
                        v *= p;
                    }
                    v
                }
            };
            let nu1p = rng.gen_range_u64(1, 2000);
            if gcd(nu1p, d) != 1 {
                continue;
            }
            let nu2 = rng.gen_range_u64(1, 2000);
            if gcd(d1 * nu1p, nu2) != 1 {
                continue;
            }
            let diff = d1 as i128 * nu1p as i128 - nu2 as i128;
            if diff == 0 {
                continue;
            }
            // pick r among divisors of diff with the exact-gcd condition,
            // sign matching so q > 0, and (r, d d1) = 1
            let diff_abs = diff.unsigned_abs() as u64;
            let mut divisors: Vec<u64> = Vec::new();
            let mut k = 1;
            while k * k <= diff_abs {
                if diff_abs % k == 0 {
                    divisors.push(k);
                    divisors.push(diff_abs / k);
                }
                k += 1;
            }
            divisors.sort_unstable();
            divisors.dedup();
            let candidates: Vec<u64> = divisors
                .into_iter()
                .filter(|&r| {
                    gcd(d * d1 * nu1p * r, diff_abs) == r && gcd(r, d * d1) == 1
                })
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let r_abs = candidates[(rng.next_u64() % candidates.len() as u64) as usize];
            let r = if diff > 0 { r_abs as i64 } else { -(r_abs as i64) };
            let a = rng.gen_signed_nonzero(1, 10_000);
            let h = rng.gen_signed_nonzero(1, 10_000);
            return (a, h, r, d, d1, nu1p, nu2);
        }
    }

    #[test]
    fn factorization_random_trials() {
        let mut rng = SplitMix64::new(53);
        for _ in 0..2000 {
            let (a, h, r, d, d1, nu1p, nu2) = random_admissible(&mut rng);
            let f = kloosterman_fraction_factorization(a, h, r, d, d1, nu1p, nu2)
                .unwrap_or_else(|e| panic!("rejected ({a},{h},{r},{d},{d1},{nu1p},{nu2}): {e}"));
            assert!(f.exact_match, "mismatch at ({a},{h},{r},{d},{d1},{nu1p},{nu2})");
            // xi reconstructs from residues alone
            assert_eq!(f.xi_class.xi_from_residues(), Some(f.pieces[0]));
        }
    }

    #[test]
    fn xi_depends_only_on_residues() {
        // congruent tuples mod d d1 = 4 share their xi piece
        let d = 2;
        let d1 = 2;
        let mut rng = SplitMix64::new(59);
        let mut by_class: std::collections::HashMap<[u64; 5], UnitFraction> =
            std::collections::HashMap::new();
        let mut hits = 0;
        for _ in 0..20_000 {
            let (a, h, r, dd, dd1, nu1p, nu2) = random_admissible(&mut rng);
            if dd != d || dd1 != d1 {
                continue;
            }
            let f = kloosterman_fraction_factorization(a, h, r, d, d1, nu1p, nu2).unwrap();
            let entry = by_class.entry(f.xi_class.residues).or_insert(f.pieces[0]);
            assert_eq!(*entry, f.pieces[0], "xi differs within class {:?}", f.xi_class);
            hits += 1;
        }
        assert!(hits > 50, "too few d=2, d1=2 samples: {hits}");
    }

    #[test]
    fn trilinear_singleton() {
        let inst = TrilinearInstance {
            theta: 3,
            a_scale: 1,
            nu: vec![2.0],
            m_scale: 1,
            alpha: vec![-1.5],
            n_scale: 1,
            beta: vec![0.5],
        };
        let r = trilinear_form(&inst).unwrap();
        // n = 1: the fraction is integral, the phase is 1
        assert!((r.value.re - (-1.5)).abs() < 1e-12);
        assert!(r.value.im.abs() < 1e-12);
        assert_eq!(r.skipped_pairs, 0);
    }

    #[test]
    fn trilinear_rejects_zero_theta() {
        let inst = TrilinearInstance {
            theta: 0,
            a_scale: 1,
            nu: vec![1.0],
            m_scale: 1,
            alpha: vec![1.0],
            n_scale: 1,
            beta: vec![1.0],
        };
        assert!(trilinear_form(&inst).is_err());
    }

    fn pm1_instance(size: u64, theta: i64, seed: u64) -> TrilinearInstance {
        let mut rng = SplitMix64::new(seed);
        let mut pm1 = |len: u64| -> Vec<f64> {
            (0..len).map(|_| if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 }).collect()
        };
        TrilinearInstance {
            theta,
            a_scale: size,
            nu: pm1(size),
            m_scale: size,
            alpha: pm1(size),
            n_scale: size,
            beta: pm1(size),
        }
    }

    #[test]
    fn trilinear_brute_force_and_cancellation() {
        let inst = pm1_instance(16, 1, 71);
        let r = trilinear_form(&inst).unwrap();
        // naive oracle with float angles and search inverses
        let mut slow = Complex64::ZERO;
        for av in 16..32u64 {
            for m in 16..32u64 {
                for n in 16..32u64 {
                    if gcd(m, n) != 1 {
                        continue;
                    }
                    let m_inv = (0..n).find(|&y| (m * y) % n == 1 % n).unwrap();
                    let w = inst.nu[(av - 16) as usize]
                        * inst.alpha[(m - 16) as usize]
                        * inst.beta[(n - 16) as usize];
                    slow += unit_phase(av as f64 * m_inv as f64 / n as f64).scale(w);
                }
            }
        }
        assert!((r.value - slow).norm() <= 1e-9 * slow.norm().max(1.0));
        assert!(r.value.norm() < r.trivial_bound, "no cancellation?");
    }

    #[test]
    fn trilinear_all_ones_small() {
        let inst = TrilinearInstance {
            theta: 1,
            a_scale: 4,
            nu: vec![1.0; 4],
            m_scale: 8,
            alpha: vec![1.0; 8],
            n_scale: 8,
            beta: vec![1.0; 8],
        };
        let r = trilinear_form(&inst).unwrap();
        let mut slow = Complex64::ZERO;
        let mut skipped = 0u64;
        for av in 4..8u64 {
            for m in 8..16u64 {
                for n in 8..16u64 {
                    if gcd(m, n) != 1 {
                        skipped += 1;
                        continue;
                    }
                    let m_inv = (0..n).find(|&y| (m * y) % n == 1).unwrap();
                    slow += unit_phase(av as f64 * m_inv as f64 / n as f64);
                }
            }
        }
        assert_eq!(r.skipped_pairs, skipped);
        assert!((r.value - slow).norm() <= 1e-9 * slow.norm().max(1.0));
        assert!(r.ratio >= 0.0 && r.reference_bound > 0.0);
        assert!(r.reference_bound_mean < r.reference_bound);
    }

    #[test]
    fn trilinear_relative_cancellation_improves_with_size() {
        let median_ratio = |size: u64| -> f64 {
            let mut ratios: Vec<f64> = (0..5)
                .map(|s| {
                    let inst = pm1_instance(size, 1, 100 + s);
                    let r = trilinear_form(&inst).unwrap();
                    r.value.norm() / r.trivial_bound
                })
                .collect();
            ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ratios[2]
        };
        let r8 = median_ratio(8);
        let r16 = median_ratio(16);
        let r32 = median_ratio(32);
        assert!(r16 < r8, "{r16} !< {r8}");
        assert!(r32 < r16, "{r32} !< {r16}");
    }
}

//! Exact discrepancy of a multiplicative convolution in arithmetic
//! progressions, its dyadic mean, and the admissible modulus window.

use crate::error::{Error, Result};
use crate::exec::{map_collect, map_collect_seq};
use crate::sequences::CoefficientSequence;
use crate::sum::Accumulator;
use crate::tables::{euler_phi, gcd, gcd_i64, mod_inverse};

/// Parameters of a mean-discrepancy run: shift a, dyadic modulus window
/// [q_start, 2 q_start), and the support scales of the two sequences.
#[derive(Debug, Clone, Copy)]
pub struct DiscrepancyParams {
    pub a: i64,
    pub q_start: u64,
    pub m_scale: u64,
    pub n_scale: u64,
}

impl DiscrepancyParams {
    pub fn x(&self) -> f64 {
        self.m_scale as f64 * self.n_scale as f64
    }

    pub fn validate(&self, alpha: &CoefficientSequence, beta: &CoefficientSequence) -> Result<()> {
        if self.a == 0 {
            return Err(Error::InvalidInput("shift a must be nonzero".into()));
        }
        if self.q_start == 0 {
            return Err(Error::InvalidInput("modulus window must start at >= 1".into()));
        }
        if self.a.unsigned_abs() as f64 > self.x() {
            return Err(Error::InvalidInput(format!(
                "|a| = {} exceeds X = {}",
                self.a.unsigned_abs(),
                self.x()
            )));
        }
        if alpha.lower() != self.m_scale || beta.lower() != self.n_scale {
            return Err(Error::InvalidInput(
                "sequence supports do not match declared scales".into(),
            ));
        }
        Ok(())
    }
}

/// Per-modulus discrepancies over [q_start, 2 q_start) with (q, a) = 1,
/// their absolute sum delta, and delta / X.
#[derive(Debug, Clone)]
pub struct DiscrepancyReport {
    pub per_q: Vec<(u64, f64)>,
    pub delta: f64,
    pub normalized: f64,
}

/// E(alpha, beta, q, a) =
///   sum_{mn = a (q)} alpha_m beta_n - (1/phi(q)) sum_{(mn,q)=1} alpha_m beta_n,
/// exactly, via residue bucketing: O(M + N + q log q) instead of O(M N).
///
/// For q = 1 the congruence is vacuous and phi(1) = 1, so E = 0 identically.
pub fn discrepancy_e(
    alpha: &CoefficientSequence,
    beta: &CoefficientSequence,
    q: u64,
    a: i64,
) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if gcd_i64(a, q) != 1 {
        return Err(Error::InvalidInput(format!("shift {a} not coprime to modulus {q}")));
    }
    if q == 1 {
        return Ok(0.0);
    }
    let a_red = a.rem_euclid(q as i64) as u64;
    let alpha_buckets = alpha.residue_sums(q);
    let beta_buckets = beta.residue_sums(q);

    // congruence term: mn = a (q) forces (m, q) = (n, q) = 1, so pair each
    // coprime class s with the class a * s^{-1}
    let mut congruence = Accumulator::new();
    let mut alpha_coprime = Accumulator::new();
    let mut beta_coprime = Accumulator::new();
    for s in 0..q {
        if gcd(s, q) != 1 {
            continue;
        }
        let s_inv = mod_inverse(s as i64, q)?;
        let partner = (a_red as u128 * s_inv as u128 % q as u128) as u64;
        congruence.add(alpha_buckets[s as usize] * beta_buckets[partner as usize]);
        alpha_coprime.add(alpha_buckets[s as usize]);
        beta_coprime.add(beta_buckets[s as usize]);
    }
    let expected = alpha_coprime.value() * beta_coprime.value() / euler_phi(q) as f64;
    Ok(congruence.value() - expected)
}

/// Mean discrepancy over the dyadic window: per-q values exact, aggregated
/// in increasing q order. Parallel over q.
pub fn mean_discrepancy(
    alpha: &CoefficientSequence,
    beta: &CoefficientSequence,
    params: &DiscrepancyParams,
) -> Result<DiscrepancyReport> {
    params.validate(alpha, beta)?;
    let moduli = window_moduli(params.q_start, params.a);
    let per_q: Vec<Result<f64>> =
        map_collect(&moduli, |&q| discrepancy_e(alpha, beta, q, params.a));
    assemble_report(moduli, per_q, params)
}

/// Sequential mirror of [`mean_discrepancy`].
pub fn mean_discrepancy_seq(
    alpha: &CoefficientSequence,
    beta: &CoefficientSequence,
    params: &DiscrepancyParams,
) -> Result<DiscrepancyReport> {
    params.validate(alpha, beta)?;
    let moduli = window_moduli(params.q_start, params.a);
    let per_q: Vec<Result<f64>> =
        map_collect_seq(&moduli, |&q| discrepancy_e(alpha, beta, q, params.a));
    assemble_report(moduli, per_q, params)
}

fn window_moduli(q_start: u64, a: i64) -> Vec<u64> {
    (q_start..2 * q_start).filter(|&q| gcd_i64(a, q) == 1).collect()
}

fn assemble_report(
    moduli: Vec<u64>,
    per_q: Vec<Result<f64>>,
    params: &DiscrepancyParams,
) -> Result<DiscrepancyReport> {
    let mut rows = Vec::with_capacity(moduli.len());
    let mut delta = Accumulator::new();
    for (q, e) in moduli.into_iter().zip(per_q) {
        let e = e?;
        delta.add(e.abs());
        rows.push((q, e));
    }
    let delta = delta.value();
    Ok(DiscrepancyReport { per_q: rows, delta, normalized: delta / params.x() })
}

/// The admissible modulus window for given support scales, in absolute size
/// and as exponents of X. `n_cap_exponent` is the derived ceiling 17/33 on
/// log N / log X beyond which the window is always empty.
#[derive(Debug, Clone, Copy)]
pub struct QWindow {
    pub lo: f64,
    pub hi: f64,
    pub lo_exponent: f64,
    pub hi_exponent: f64,
    pub nonempty: bool,
    pub n_exponent: f64,
    pub n_cap_exponent: f64,
    pub n_below_cap: bool,
}

/// Window endpoints as exponents of X, for N = X^theta:
/// [ (56/23) theta - 17/23 + eps,  theta - eps ].
pub fn admissible_q_window_exponents(theta_n: f64, eps: f64) -> (f64, f64) {
    (56.0 / 23.0 * theta_n - 17.0 / 23.0 + eps, theta_n - eps)
}

/// The window [N^{56/23} X^{-17/23+eps}, N X^{-eps}], empty when the lower
/// endpoint exceeds the upper. Exponent arithmetic is done in log X units.
pub fn admissible_q_window(m_scale: f64, n_scale: f64, eps: f64) -> QWindow {
    let x = m_scale * n_scale;
    let log_x = x.ln();
    let theta_n = n_scale.ln() / log_x;
    let (lo_exp, hi_exp) = admissible_q_window_exponents(theta_n, eps);
    let n_cap = 17.0 / 33.0;
    QWindow {
        lo: (lo_exp * log_x).exp(),
        hi: (hi_exp * log_x).exp(),
        lo_exponent: lo_exp,
        hi_exponent: hi_exp,
        nonempty: lo_exp <= hi_exp,
        n_exponent: theta_n,
        n_cap_exponent: n_cap,
        n_below_cap: theta_n < n_cap,
    }
}

//! The dispersion expansion U, V, W with main terms, the exact identities
//! behind it, and the Cauchy-Schwarz skeleton bounding the mean discrepancy.
//!
//! For a shift a, modulus dilation Q, and inner scale M, with T(q, m) =
//! sum_{n = a m^-1 (q)} beta_n - (1/phi(q)) sum_{(n,q)=1} beta_n:
//!
//!   sum_{(q,a)=1} psi(q/Q) sum_{(m,q)=1} psi(m/M) T(q,m)^2 = W - 2V + U,
//!
//! exactly, which is why W - 2V + U >= 0 and why the squared mean
//! discrepancy is at most (sum of alpha^2 over the window) * (W - 2V + U).
//! All inner m-sums are bucketed by residue class mod q; the three pieces
//! share one bucket pass per q and one summation order, so the identity
//! holds to ~1e-12 relative in floating point.

use crate::cutoff::SmoothCutoff;
use crate::discrepancy::{mean_discrepancy, DiscrepancyParams};
use crate::error::{Error, Result};
use crate::exec::{map_collect, map_collect_seq};
use crate::sequences::CoefficientSequence;
use crate::sum::Accumulator;
use crate::tables::{euler_phi, gcd, gcd_i64, mod_inverse};

/// One modulus' share of the expansion (already weighted by psi(q/Q)).
#[derive(Debug, Clone, Copy)]
pub struct QContribution {
    pub q: u64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

/// The six dispersion quantities for one parameter set, the dual truncation
/// H = Q X^eps / M, and the complementary-divisor range R = 2N/Q.
#[derive(Debug, Clone)]
pub struct DispersionTerms {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub u_mt: f64,
    pub v_mt: f64,
    pub w_mt: f64,
    pub h: f64,
    pub h_ceil: u64,
    pub r: f64,
    pub r_ceil: u64,
    pub per_q: Vec<QContribution>,
}

impl DispersionTerms {
    /// W - 2V + U, the psi-weighted variance. Nonnegative.
    pub fn variance(&self) -> f64 {
        self.w - 2.0 * self.v + self.u
    }

    /// Main-term combination W_MT - 2 V_MT + U_MT.
    pub fn main_term_variance(&self) -> f64 {
        self.w_mt - 2.0 * self.v_mt + self.u_mt
    }
}

/// Everything one modulus contributes, in one bucket pass.
struct QSlice {
    q: u64,
    u: f64,
    v: f64,
    w: f64,
    u_mt_raw: f64,    // psi_q / (q phi) * S^2        (hat0 * M applied later)
    w_mt_raw: f64,    // psi_q / q * sum B^2          (hat0 * M applied later)
    sq_weighted: f64, // psi_q * sum_c psi_bucket[c] (B - mu)^2
    sq_plain_raw: f64, // psi_q / q * sum (B - mu)^2  (hat0 * M applied later)
}

fn zero_slice(q: u64) -> QSlice {
    QSlice {
        q,
        u: 0.0,
        v: 0.0,
        w: 0.0,
        u_mt_raw: 0.0,
        w_mt_raw: 0.0,
        sq_weighted: 0.0,
        sq_plain_raw: 0.0,
    }
}

fn q_slice(
    beta: &CoefficientSequence,
    m_scale: u64,
    q_scale: u64,
    a: i64,
    psi: &SmoothCutoff,
    q: u64,
) -> QSlice {
    if gcd_i64(a, q) != 1 {
        return zero_slice(q);
    }
    let psi_q = psi.eval(q as f64 / q_scale as f64);
    if psi_q == 0.0 {
        return zero_slice(q);
    }
    let a_red = a.rem_euclid(q as i64) as u64;
    let phi = euler_phi(q) as f64;
    let buckets = beta.residue_sums(q);

    // psi(m/M) bucketed by residue class mod q
    let m_f = m_scale as f64;
    let mut psi_bucket = vec![Accumulator::new(); q as usize];
    let m_lo = m_scale / 2 + 1;
    let m_hi = (5 * m_scale - 1) / 2;
    for m in m_lo..=m_hi {
        psi_bucket[(m % q) as usize].add(psi.eval(m as f64 / m_f));
    }
    let psi_bucket: Vec<f64> = psi_bucket.into_iter().map(|acc| acc.value()).collect();

    let mut coprime_total = Accumulator::new();
    for delta in 0..q {
        if gcd(delta, q) == 1 {
            coprime_total.add(buckets[delta as usize]);
        }
    }
    let s_beta = coprime_total.value();
    let mu = s_beta / phi;

    // one delta sweep feeds U, V, W and both identity routes; the shared
    // order keeps the cancellations in W - 2V + U at rounding level
    let mut u_inner = Accumulator::new();
    let mut v_inner = Accumulator::new();
    let mut w_inner = Accumulator::new();
    let mut b2_inner = Accumulator::new();
    let mut sq_weighted = Accumulator::new();
    let mut sq_plain = Accumulator::new();
    for delta in 0..q {
        if gcd(delta, q) != 1 {
            continue;
        }
        let inv = mod_inverse(delta as i64, q).expect("coprime class invertible");
        let c = if q == 1 { 0 } else { (a_red as u128 * inv as u128 % q as u128) as u64 };
        let b = buckets[delta as usize];
        let p = psi_bucket[c as usize];
        u_inner.add(p);
        v_inner.add(b * p);
        w_inner.add(b * b * p);
        b2_inner.add(b * b);
        let dev = b - mu;
        sq_weighted.add(p * dev * dev);
        sq_plain.add(dev * dev);
    }

    QSlice {
        q,
        u: psi_q / (phi * phi) * s_beta * s_beta * u_inner.value(),
        v: psi_q / phi * s_beta * v_inner.value(),
        w: psi_q * w_inner.value(),
        u_mt_raw: psi_q / (q as f64 * phi) * s_beta * s_beta,
        w_mt_raw: psi_q / q as f64 * b2_inner.value(),
        sq_weighted: psi_q * sq_weighted.value(),
        sq_plain_raw: psi_q / q as f64 * sq_plain.value(),
    }
}

/// Moduli carrying nonzero psi(q/Q) weight: the dilated range (Q/2, 5Q/2).
fn dispersion_moduli(q_scale: u64) -> Vec<u64> {
    let lo = q_scale / 2 + 1;
    let hi = (5 * q_scale - 1) / 2;
    (lo..=hi).collect()
}

fn slices(
    beta: &CoefficientSequence,
    m_scale: u64,
    q_scale: u64,
    a: i64,
    psi: &SmoothCutoff,
    sequential: bool,
) -> Vec<QSlice> {
    let moduli = dispersion_moduli(q_scale);
    let worker = |&q: &u64| q_slice(beta, m_scale, q_scale, a, psi, q);
    if sequential {
        map_collect_seq(&moduli, worker)
    } else {
        map_collect(&moduli, worker)
    }
}

fn assemble(
    slices: Vec<QSlice>,
    beta: &CoefficientSequence,
    m_scale: u64,
    q_scale: u64,
    eps: f64,
    psi: &SmoothCutoff,
) -> DispersionTerms {
    let hat0_m = psi.hat_zero() * m_scale as f64;
    let mut u = Accumulator::new();
    let mut v = Accumulator::new();
    let mut w = Accumulator::new();
    let mut u_mt = Accumulator::new();
    let mut w_mt = Accumulator::new();
    let mut per_q = Vec::with_capacity(slices.len());
    for s in &slices {
        u.add(s.u);
        v.add(s.v);
        w.add(s.w);
        u_mt.add(s.u_mt_raw);
        w_mt.add(s.w_mt_raw);
        per_q.push(QContribution { q: s.q, u: s.u, v: s.v, w: s.w });
    }
    let u_mt = hat0_m * u_mt.value();
    let n_scale = beta.lower();
    let x = m_scale as f64 * n_scale as f64;
    let h = q_scale as f64 * x.powf(eps) / m_scale as f64;
    let r = 2.0 * n_scale as f64 / q_scale as f64;
    DispersionTerms {
        u: u.value(),
        v: v.value(),
        w: w.value(),
        u_mt,
        // U_MT and V_MT share one formula; evaluated once, stored twice
        v_mt: u_mt,
        w_mt: hat0_m * w_mt.value(),
        h,
        h_ceil: h.ceil() as u64,
        r,
        r_ceil: r.ceil() as u64,
        per_q,
    }
}

/// The dispersion quantities for one parameter set. `eps` only enters the
/// reported truncation H = Q X^eps / M.
pub fn compute_uvw(
    beta: &CoefficientSequence,
    m_scale: u64,
    q_scale: u64,
    a: i64,
    psi: &SmoothCutoff,
    eps: f64,
) -> Result<DispersionTerms> {
    check_scales(m_scale, q_scale)?;
    let s = slices(beta, m_scale, q_scale, a, psi, false);
    Ok(assemble(s, beta, m_scale, q_scale, eps, psi))
}

/// Sequential mirror of [`compute_uvw`].
pub fn compute_uvw_seq(
    beta: &CoefficientSequence,
    m_scale: u64,
    q_scale: u64,
    a: i64,
    psi: &SmoothCutoff,
    eps: f64,
) -> Result<DispersionTerms> {
    check_scales(m_scale, q_scale)?;
    let s = slices(beta, m_scale, q_scale, a, psi, true);
    Ok(assemble(s, beta, m_scale, q_scale, eps, psi))
}

fn check_scales(m_scale: u64, q_scale: u64) -> Result<()> {
    if m_scale == 0 || q_scale == 0 {
        return Err(Error::InvalidInput("scales must be positive".into()));
    }
    Ok(())
}

/// Both sides of an exact identity and the gap between them.
#[derive(Debug, Clone, Copy)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

fn identity_check(lhs: f64, rhs: f64) -> IdentityCheck {
    let abs_gap = (lhs - rhs).abs();
    IdentityCheck { lhs, rhs, abs_gap, rel_gap: abs_gap / lhs.abs().max(1.0) }
}

/// Verifies sum_q psi(q/Q) sum_m psi(m/M) T(q,m)^2 = W - 2V + U.
pub fn dispersion_expansion_identity(
    beta: &CoefficientSequence,
    m_scale: u64,
    q_scale: u64,
    a: i64,
    psi: &SmoothCutoff,
) -> Result<IdentityCheck> {
    check_scales(m_scale, q_scale)?;
    let s = slices(beta, m_scale, q_scale, a, psi, false);
    let mut lhs = Accumulator::new();
    let mut u = Accumulator::new();
    let mut v = Accumulator::new();
    let mut w = Accumulator::new();
    for sl in &s {
        lhs.add(sl.sq_weighted);
        u.add(sl.u);
        v.add(sl.v);
        w.add(sl.w);
    }
    let rhs = w.value() - 2.0 * v.value() + u.value();
    Ok(identity_check(lhs.value(), rhs))
}

/// Verifies W_MT - 2 V_MT + U_MT =
/// hat{psi}(0) M sum_{(q,a)=1} (psi(q/Q)/q) sum_{(d,q)=1} (B_d - S/phi)^2.
pub fn main_term_variance_identity(
    beta: &CoefficientSequence,
    m_scale: u64,
    q_scale: u64,
    a: i64,
    psi: &SmoothCutoff,
) -> Result<IdentityCheck> {
    check_scales(m_scale, q_scale)?;
    let s = slices(beta, m_scale, q_scale, a, psi, false);
    let hat0_m = psi.hat_zero() * m_scale as f64;
    let mut rhs = Accumulator::new();
    let mut u_mt = Accumulator::new();
    let mut w_mt = Accumulator::new();
    for sl in &s {
        rhs.add(sl.sq_plain_raw);
        u_mt.add(sl.u_mt_raw);
        w_mt.add(sl.w_mt_raw);
    }
    let lhs = hat0_m * w_mt.value() - 2.0 * hat0_m * u_mt.value() + hat0_m * u_mt.value();
    Ok(identity_check(lhs, hat0_m * rhs.value()))
}

/// The Cauchy-Schwarz skeleton: delta^2 against
/// (sum_{q ~ Q, (q,a)=1} sum_{m ~ M, (m,q)=1} alpha_m^2) * (W - 2V + U).
#[derive(Debug, Clone, Copy)]
pub struct CauchySchwarzCheck {
    pub delta: f64,
    pub delta_sq: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn cauchy_schwarz_bound(
    alpha: &CoefficientSequence,
    beta: &CoefficientSequence,
    params: &DiscrepancyParams,
    psi: &SmoothCutoff,
    eps: f64,
) -> Result<CauchySchwarzCheck> {
    let report = mean_discrepancy(alpha, beta, params)?;
    let terms = compute_uvw(beta, params.m_scale, params.q_start, params.a, psi, eps)?;
    // alpha^2 mass, counted once per admissible (q, m) pair
    let mut alpha_sq = Accumulator::new();
    for q in params.q_start..2 * params.q_start {
        if gcd_i64(params.a, q) != 1 {
            continue;
        }
        for m in alpha.support() {
            if gcd(m, q) == 1 {
                let val = alpha.get(m);
                alpha_sq.add(val * val);
            }
        }
    }
    let delta = report.delta;
    let delta_sq = delta * delta;
    let bound = alpha_sq.value() * terms.variance();
    let ratio = if bound == 0.0 { 0.0 } else { delta_sq / bound };
    Ok(CauchySchwarzCheck { delta, delta_sq, bound, ratio })
}

/// The dual truncation H = Q X^eps / M and complementary range R = 2N/Q.
#[derive(Debug, Clone, Copy)]
pub struct TruncationParams {
    pub h: f64,
    pub h_ceil: u64,
    pub r: f64,
    pub r_ceil: u64,
}

pub fn truncation_parameters(
    m_scale: u64,
    q_scale: u64,
    x: f64,
    eps: f64,
) -> Result<TruncationParams> {
    if m_scale == 0 || q_scale == 0 || x <= 0.0 {
        return Err(Error::InvalidInput("positive inputs required".into()));
    }
    let n = x / m_scale as f64;
    let h = q_scale as f64 * x.powf(eps) / m_scale as f64;
    let r = 2.0 * n / q_scale as f64;
    Ok(TruncationParams { h, h_ceil: h.ceil() as u64, r, r_ceil: r.ceil() as u64 })
}

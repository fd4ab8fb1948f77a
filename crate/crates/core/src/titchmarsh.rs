//! Desk-scale verifier for the shifted-divisor corollary: the exact sum
//! sum alpha_m beta_n tau_2(mn - 1), its phi-normalised main term, the
//! hyperbola split that reassembles tau_2 exactly, and the dyadic
//! dissection grid used to localise variable sizes.

use crate::error::{Error, Result};
use crate::exec::{map_collect, map_collect_seq};
use crate::sequences::CoefficientSequence;
use crate::sum::Accumulator;
use crate::tables::{euler_phi, gcd, ArithTables};
use crate::util::{is_perfect_square, isqrt};

/// sum_{m ~ M} sum_{n ~ N} alpha_m beta_n tau_2(mn - 1), exactly, with
/// tau_2 read from tables (limit must reach (2M-1)(2N-1) - 1).
pub fn corollary_lhs(
    alpha: &CoefficientSequence,
    beta: &CoefficientSequence,
    tables: &ArithTables,
) -> Result<f64> {
    let needed = (2 * alpha.lower() - 1) * (2 * beta.lower() - 1) - 1;
    if needed > tables.limit() {
        return Err(Error::TableTooSmall { needed, limit: tables.limit() });
    }
    if alpha.lower() == 1 && beta.lower() == 1 {
        return Err(Error::InvalidInput("m = n = 1 makes mn - 1 = 0".into()));
    }
    let rows: Vec<u64> = alpha.support().collect();
    let per_m = map_collect(&rows, |&m| {
        let am = alpha.get(m);
        if am == 0.0 {
            return 0.0;
        }
        let mut acc = Accumulator::new();
        for n in beta.support() {
            acc.add(beta.get(n) * tables.tau(2, m * n - 1) as f64);
        }
        am * acc.value()
    });
    let mut total = Accumulator::new();
    for v in per_m {
        total.add(v);
    }
    Ok(total.value())
}

/// The corollary's main term
/// 2 sum_{q >= 1} (1/phi(q)) sum_{m ~ M, n ~ N, mn > q^2, (mn,q)=1} alpha_m beta_n.
/// The q-sum is finite: beyond q^2 >= (2M-1)(2N-1) the condition mn > q^2
/// is never met. Parallel over q.
pub fn corollary_rhs(alpha: &CoefficientSequence, beta: &CoefficientSequence) -> f64 {
    corollary_rhs_impl(alpha, beta, false)
}

/// Sequential mirror of [`corollary_rhs`].
pub fn corollary_rhs_seq(alpha: &CoefficientSequence, beta: &CoefficientSequence) -> f64 {
    corollary_rhs_impl(alpha, beta, true)
}

fn corollary_rhs_impl(
    alpha: &CoefficientSequence,
    beta: &CoefficientSequence,
    sequential: bool,
) -> f64 {
    let max_product = (2 * alpha.lower() - 1) * (2 * beta.lower() - 1);
    let q_max = isqrt(max_product.saturating_sub(1));
    let moduli: Vec<u64> = (1..=q_max.max(1)).collect();
    let worker = |&q: &u64| rhs_single_modulus(alpha, beta, q);
    let per_q = if sequential {
        map_collect_seq(&moduli, worker)
    } else {
        map_collect(&moduli, worker)
    };
    let mut total = Accumulator::new();
    for v in per_q {
        total.add(v);
    }
    2.0 * total.value()
}

/// One modulus' term: (1/phi(q)) sum over coprime pairs with mn > q^2,
/// via suffix sums of beta over the coprime indices.
fn rhs_single_modulus(alpha: &CoefficientSequence, beta: &CoefficientSequence, q: u64) -> f64 {
    let n_lo = beta.lower();
    let n_len = n_lo as usize;
    // suffix[i] = sum_{j >= i, (n_j, q) = 1} beta_j
    let mut suffix = vec![0.0f64; n_len + 1];
    let mut acc = Accumulator::new();
    for i in (0..n_len).rev() {
        let n = n_lo + i as u64;
        if gcd(n, q) == 1 {
            acc.add(beta.values()[i]);
        }
        suffix[i] = acc.value();
    }
    let q_sq = q as u128 * q as u128;
    let mut inner = Accumulator::new();
    for m in alpha.support() {
        if gcd(m, q) != 1 {
            continue;
        }
        let am = alpha.get(m);
        if am == 0.0 {
            continue;
        }
        // mn > q^2 iff n >= floor(q^2 / m) + 1
        let threshold = (q_sq / m as u128) as u64 + 1;
        let start = threshold.max(n_lo);
        if start >= 2 * n_lo {
            continue;
        }
        inner.add(am * suffix[(start - n_lo) as usize]);
    }
    inner.value() / euler_phi(q) as f64
}

/// The exact hyperbola split of the lhs:
/// tau_2(w) = 2 #{q | w : q^2 < w} + [w square], with divisors q <= X^{1/2}
/// collected in s0 and X^{1/2} < q <= 2 X^{1/2} in s1 (X = M N).
/// reassembled = 2 s0 + 2 s1 + square_correction equals the lhs exactly.
#[derive(Debug, Clone, Copy)]
pub struct HyperbolaSplit {
    pub s0: f64,
    pub s1: f64,
    pub square_correction: f64,
    pub reassembled: f64,
}

pub fn hyperbola_split(alpha: &CoefficientSequence, beta: &CoefficientSequence) -> Result<HyperbolaSplit> {
    if alpha.lower() == 1 && beta.lower() == 1 {
        return Err(Error::InvalidInput("m = n = 1 makes mn - 1 = 0".into()));
    }
    let x = alpha.lower() as u128 * beta.lower() as u128;
    let max_w = (2 * alpha.lower() as u128 - 1) * (2 * beta.lower() as u128 - 1) - 1;
    let q_hi = isqrt((max_w.saturating_sub(1)) as u64);

    let moduli: Vec<u64> = (1..=q_hi.max(1)).collect();
    let per_q: Vec<f64> = map_collect(&moduli, |&q| split_single_modulus(alpha, beta, q));
    let mut s0 = Accumulator::new();
    let mut s1 = Accumulator::new();
    for (&q, &v) in moduli.iter().zip(&per_q) {
        if (q as u128 * q as u128) <= x {
            s0.add(v);
        } else {
            s1.add(v);
        }
    }

    // pairs with mn - 1 a perfect square, counted once
    let rows: Vec<u64> = alpha.support().collect();
    let per_m = map_collect(&rows, |&m| {
        let am = alpha.get(m);
        if am == 0.0 {
            return 0.0;
        }
        let mut acc = Accumulator::new();
        for n in beta.support() {
            if is_perfect_square(m * n - 1) {
                acc.add(beta.get(n));
            }
        }
        am * acc.value()
    });
    let mut squares = Accumulator::new();
    for v in per_m {
        squares.add(v);
    }

    let s0 = s0.value();
    let s1 = s1.value();
    let square_correction = squares.value();
    Ok(HyperbolaSplit {
        s0,
        s1,
        square_correction,
        reassembled: 2.0 * s0 + 2.0 * s1 + square_correction,
    })
}

/// sum over pairs with q | mn - 1 and q^2 < mn - 1, weighted alpha beta:
/// bucket beta by residue class mod q with per-class suffix sums, then for
/// each m pick the class of m^-1 and cut at the size threshold.
fn split_single_modulus(alpha: &CoefficientSequence, beta: &CoefficientSequence, q: u64) -> f64 {
    let n_lo = beta.lower();
    // per residue class: indices ascending, suffix-summed
    let mut class_n: Vec<Vec<u64>> = vec![Vec::new(); q as usize];
    for n in beta.support() {
        class_n[(n % q) as usize].push(n);
    }
    let class_suffix: Vec<Vec<f64>> = class_n
        .iter()
        .map(|ns| {
            let mut suf = vec![0.0; ns.len() + 1];
            let mut acc = Accumulator::new();
            for (i, &n) in ns.iter().enumerate().rev() {
                acc.add(beta.get(n));
                suf[i] = acc.value();
            }
            suf
        })
        .collect();
    let q_sq = q as u128 * q as u128;
    let mut total = Accumulator::new();
    for m in alpha.support() {
        if gcd(m, q) != 1 {
            continue;
        }
        let am = alpha.get(m);
        if am == 0.0 {
            continue;
        }
        let inv = crate::tables::mod_inverse(m as i64, q).expect("coprime");
        let class = &class_n[inv as usize];
        // q | mn - 1 and mn - 1 > q^2 iff n >= (q^2 + 1)/m + 1
        let threshold = ((q_sq + 1) / m as u128) as u64 + 1;
        let start = threshold.max(n_lo);
        let idx = class.partition_point(|&n| n < start);
        total.add(am * class_suffix[(inv) as usize][idx]);
    }
    total.value()
}

/// Geometric dissection grid: Delta = 2^{1/L0} with L0 = floor(L^B),
/// L = log 2X, and three ladders of L0 rungs starting at M, N, X^{1/2}.
#[derive(Debug, Clone)]
pub struct DissectionGrid {
    pub b_exponent: u32,
    pub l0: u64,
    pub delta: f64,
    pub x: f64,
    pub m_ladder: Vec<f64>,
    pub n_ladder: Vec<f64>,
    pub q_ladder: Vec<f64>,
}

/// One cell of the grid with its small-product flag:
/// e0 = (M0 N0 - 1 <= Q0^2 Delta^2), the cells where the size constraint
/// mn - 1 > q^2 cannot be dropped.
#[derive(Debug, Clone, Copy)]
pub struct DissectionCell {
    pub m0: f64,
    pub n0: f64,
    pub q0: f64,
    pub e0_flag: bool,
}

impl DissectionGrid {
    pub fn cell_count(&self) -> u128 {
        self.l0 as u128 * self.l0 as u128 * self.l0 as u128
    }

    pub fn e0_flag(&self, m0: f64, n0: f64, q0: f64) -> bool {
        m0 * n0 - 1.0 <= q0 * q0 * self.delta * self.delta
    }

    /// All L0^3 cells, lazily.
    pub fn cells(&self) -> impl Iterator<Item = DissectionCell> + '_ {
        self.m_ladder.iter().flat_map(move |&m0| {
            self.n_ladder.iter().flat_map(move |&n0| {
                self.q_ladder.iter().map(move |&q0| DissectionCell {
                    m0,
                    n0,
                    q0,
                    e0_flag: self.e0_flag(m0, n0, q0),
                })
            })
        })
    }

    /// Number of cells carrying the e0 flag.
    pub fn e0_count(&self) -> u128 {
        self.cells().filter(|c| c.e0_flag).count() as u128
    }
}

pub fn build_dissection(m_scale: u64, n_scale: u64, b_exponent: u32) -> Result<DissectionGrid> {
    if m_scale == 0 || n_scale == 0 || b_exponent == 0 {
        return Err(Error::InvalidInput("scales and B must be positive".into()));
    }
    let x = m_scale as f64 * n_scale as f64;
    let l = (2.0 * x).ln();
    let l0 = l.powi(b_exponent as i32).floor() as u64;
    if l0 == 0 {
        return Err(Error::InvalidInput("dissection needs log(2X)^B >= 1".into()));
    }
    let delta = 2f64.powf(1.0 / l0 as f64);
    let ladder = |start: f64| -> Vec<f64> {
        (0..l0).map(|i| start * delta.powi(i as i32)).collect()
    };
    Ok(DissectionGrid {
        b_exponent,
        l0,
        delta,
        x,
        m_ladder: ladder(m_scale as f64),
        n_ladder: ladder(n_scale as f64),
        q_ladder: ladder(x.sqrt()),
    })
}

/// Both sides of the corollary with deviations. No tolerance is asserted
/// here: the error term's constant is inexplicit, so callers compare
/// deviations across sizes.
#[derive(Debug, Clone, Copy)]
pub struct CorollaryDeviation {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_dev: f64,
    pub rel_dev: f64,
}

pub fn corollary_deviation(
    alpha: &CoefficientSequence,
    beta: &CoefficientSequence,
    tables: &ArithTables,
) -> Result<CorollaryDeviation> {
    let lhs = corollary_lhs(alpha, beta, tables)?;
    let rhs = corollary_rhs(alpha, beta);
    let abs_dev = (lhs - rhs).abs();
    Ok(CorollaryDeviation { lhs, rhs, abs_dev, rel_dev: abs_dev / lhs.abs().max(1.0) })
}

//! Coefficient sequences on dyadic supports and the auxiliary averages:
//! Siegel-Walfisz defects, Barban-Davenport-Halberstam variance, and
//! divisor sums over progressions.

use crate::error::{Error, Result};
use crate::exec::{map_collect, map_collect_seq};
use crate::sum::Accumulator;
use crate::tables::{euler_phi, gcd, gcd_i64, ArithTables};

/// The built-in sequence families. `ConstantOne` and `Moebius` are the
/// canonical Siegel-Walfisz test sequences (order 1); `Tau2` exercises the
/// order-2 divisor bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceKind {
    ConstantOne,
    Moebius,
    Tau2,
}

impl SequenceKind {
    pub fn order(self) -> usize {
        match self {
            SequenceKind::ConstantOne | SequenceKind::Moebius => 1,
            SequenceKind::Tau2 => 2,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "constant_one" | "ones" => Ok(SequenceKind::ConstantOne),
            "moebius" => Ok(SequenceKind::Moebius),
            "tau2" => Ok(SequenceKind::Tau2),
            other => Err(Error::InvalidInput(format!("unknown sequence kind '{other}'"))),
        }
    }
}

/// Real coefficients on the dyadic support [lower, 2*lower), divisor-bounded:
/// |values[n - lower]| <= tau_k(n) for the declared order k. The bound is
/// checked at construction and never revalidated.
#[derive(Debug, Clone)]
pub struct CoefficientSequence {
    lower: u64,
    values: Vec<f64>,
    order_k: usize,
}

impl CoefficientSequence {
    /// Build one of the named families.
    pub fn build(kind: SequenceKind, lower: u64, tables: &ArithTables) -> Result<Self> {
        if lower == 0 {
            return Err(Error::InvalidInput("support must start at >= 1".into()));
        }
        let hi = 2 * lower - 1;
        if hi > tables.limit() {
            return Err(Error::TableTooSmall { needed: hi, limit: tables.limit() });
        }
        let values: Vec<f64> = (lower..2 * lower)
            .map(|n| match kind {
                SequenceKind::ConstantOne => 1.0,
                SequenceKind::Moebius => tables.mu(n) as f64,
                SequenceKind::Tau2 => tables.tau(2, n) as f64,
            })
            .collect();
        Self::from_values(lower, values, kind.order(), tables)
    }

    /// Wrap explicit values, validating the divisor bound.
    pub fn from_values(
        lower: u64,
        values: Vec<f64>,
        order_k: usize,
        tables: &ArithTables,
    ) -> Result<Self> {
        if lower == 0 {
            return Err(Error::InvalidInput("support must start at >= 1".into()));
        }
        if values.len() != lower as usize {
            return Err(Error::InvalidInput(format!(
                "support [{lower}, {}) needs {lower} values, got {}",
                2 * lower,
                values.len()
            )));
        }
        let hi = 2 * lower - 1;
        if hi > tables.limit() {
            return Err(Error::TableTooSmall { needed: hi, limit: tables.limit() });
        }
        let mut offenders = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            let n = lower + i as u64;
            if v.abs() > tables.tau(order_k, n) as f64 {
                offenders.push(n);
                if offenders.len() >= 8 {
                    break;
                }
            }
        }
        if !offenders.is_empty() {
            return Err(Error::DivisorBoundViolated { order: order_k, offenders });
        }
        Ok(Self { lower, values, order_k })
    }

    /// Build from explicit `(index, value)` pairs; indices must lie in
    /// [lower, 2*lower) and missing indices default to zero.
    pub fn from_pairs(
        lower: u64,
        pairs: &[(u64, f64)],
        order_k: usize,
        tables: &ArithTables,
    ) -> Result<Self> {
        if lower == 0 {
            return Err(Error::InvalidInput("support must start at >= 1".into()));
        }
        let mut values = vec![0.0; lower as usize];
        for &(n, v) in pairs {
            if n < lower || n >= 2 * lower {
                return Err(Error::InvalidInput(format!(
                    "index {n} outside support [{lower}, {})",
                    2 * lower
                )));
            }
            values[(n - lower) as usize] = v;
        }
        Self::from_values(lower, values, order_k, tables)
    }

    /// The all-zero sequence (order 1; trivially bounded).
    pub fn zero(lower: u64, tables: &ArithTables) -> Result<Self> {
        Self::from_values(lower, vec![0.0; lower as usize], 1, tables)
    }

    /// Seeded random coefficients, uniform in [-tau_k(n), tau_k(n)].
    pub fn random_divisor_bounded(
        lower: u64,
        order_k: usize,
        seed: u64,
        tables: &ArithTables,
    ) -> Result<Self> {
        let mut rng = crate::rng::SplitMix64::new(seed);
        let values: Vec<f64> = (lower..2 * lower)
            .map(|n| {
                let bound = tables.tau(order_k, n) as f64;
                (2.0 * rng.next_f64() - 1.0) * bound
            })
            .collect();
        Self::from_values(lower, values, order_k, tables)
    }

    pub fn lower(&self) -> u64 {
        self.lower
    }

    /// Half-open support [lower, 2*lower).
    pub fn support(&self) -> std::ops::Range<u64> {
        self.lower..2 * self.lower
    }

    pub fn order(&self) -> usize {
        self.order_k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, n: u64) -> f64 {
        if n < self.lower || n >= 2 * self.lower {
            0.0
        } else {
            self.values[(n - self.lower) as usize]
        }
    }

    /// Zero out coefficients at indices dividing the shift; reproduces the
    /// normalisation under which terms with n | a never contribute.
    pub fn filter_shift_divisors(mut self, a: i64) -> Self {
        let a_abs = a.unsigned_abs();
        for i in 0..self.values.len() {
            let n = self.lower + i as u64;
            if a_abs % n == 0 {
                self.values[i] = 0.0;
            }
        }
        self
    }

    /// Bucket the coefficients by residue class mod q (compensated, in
    /// support order). Returns a vector of length q.
    pub fn residue_sums(&self, q: u64) -> Vec<f64> {
        let mut acc = vec![Accumulator::new(); q as usize];
        for (i, &v) in self.values.iter().enumerate() {
            let n = self.lower + i as u64;
            acc[(n % q) as usize].add(v);
        }
        acc.into_iter().map(|a| a.value()).collect()
    }

    /// Sum over the support restricted to (n, q) = 1.
    pub fn coprime_sum(&self, q: u64) -> f64 {
        let mut acc = Accumulator::new();
        for (i, &v) in self.values.iter().enumerate() {
            let n = self.lower + i as u64;
            if gcd(n, q) == 1 {
                acc.add(v);
            }
        }
        acc.value()
    }

    pub fn l1_norm(&self) -> f64 {
        let mut acc = Accumulator::new();
        for &v in &self.values {
            acc.add(v.abs());
        }
        acc.value()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let mut acc = Accumulator::new();
        for &v in &self.values {
            acc.add(v * v);
        }
        acc.value()
    }
}

/// Parse a sequence file: `index value` per line, blank lines and `#`
/// comments allowed.
pub fn parse_sequence_pairs(text: &str) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let idx = parts
            .next()
            .and_then(|t| t.parse::<u64>().ok())
            .ok_or(Error::MalformedSequenceFile {
                line: lineno + 1,
                message: "expected integer index".into(),
            })?;
        let val = parts
            .next()
            .and_then(|t| t.parse::<f64>().ok())
            .ok_or(Error::MalformedSequenceFile {
                line: lineno + 1,
                message: "expected real value".into(),
            })?;
        if parts.next().is_some() {
            return Err(Error::MalformedSequenceFile {
                line: lineno + 1,
                message: "trailing tokens".into(),
            });
        }
        out.push((idx, val));
    }
    Ok(out)
}

/// Siegel-Walfisz defect:
/// sum_{n = a (q), (n,r)=1} beta_n - (1/phi(q)) sum_{(n, qr)=1} beta_n,
/// computed exactly over the support. The asymptotic condition itself is
/// not decidable by finite computation; callers compare defects across
/// scales.
pub fn sw_defect(seq: &CoefficientSequence, q: u64, a: i64, r: u64) -> Result<f64> {
    if q == 0 || r == 0 {
        return Err(Error::InvalidInput("modulus and filter must be positive".into()));
    }
    if gcd_i64(a, q) != 1 {
        return Err(Error::InvalidInput(format!("shift {a} not coprime to modulus {q}")));
    }
    let a_red = a.rem_euclid(q as i64) as u64;
    let mut progression = Accumulator::new();
    let mut reference = Accumulator::new();
    for (i, &v) in seq.values().iter().enumerate() {
        let n = seq.lower() + i as u64;
        if n % q == a_red && gcd(n, r) == 1 {
            progression.add(v);
        }
        if gcd(n, q) == 1 && gcd(n, r) == 1 {
            reference.add(v);
        }
    }
    Ok(progression.value() - reference.value() / euler_phi(q) as f64)
}

/// Barban-Davenport-Halberstam variance
/// sum_{q <= q_max} sum_{(a,q)=1} |sum_{n=a(q)} beta_n - (1/phi(q)) sum_{(n,q)=1} beta_n|^2.
pub fn bdh_variance(seq: &CoefficientSequence, q_max: u64) -> f64 {
    let moduli: Vec<u64> = (1..=q_max).collect();
    let per_q = map_collect(&moduli, |&q| bdh_single_modulus(seq, q));
    let mut total = Accumulator::new();
    for v in per_q {
        total.add(v);
    }
    total.value()
}

/// Sequential mirror of [`bdh_variance`].
pub fn bdh_variance_seq(seq: &CoefficientSequence, q_max: u64) -> f64 {
    let moduli: Vec<u64> = (1..=q_max).collect();
    let per_q = map_collect_seq(&moduli, |&q| bdh_single_modulus(seq, q));
    let mut total = Accumulator::new();
    for v in per_q {
        total.add(v);
    }
    total.value()
}

fn bdh_single_modulus(seq: &CoefficientSequence, q: u64) -> f64 {
    let buckets = seq.residue_sums(q);
    let phi = euler_phi(q) as f64;
    let mut coprime_total = Accumulator::new();
    for (res, &b) in buckets.iter().enumerate() {
        if gcd(res as u64, q) == 1 {
            coprime_total.add(b);
        }
    }
    let mean = coprime_total.value() / phi;
    let mut var = Accumulator::new();
    for (res, &b) in buckets.iter().enumerate() {
        if gcd(res as u64, q) == 1 {
            let d = b - mean;
            var.add(d * d);
        }
    }
    var.value()
}

/// Divisor sums in progressions: sum = sum_{x-y < n <= x, n = a (q)} tau_k(n)
/// and its ratio against (y / phi(q)) log^{k-1}(2x).
#[derive(Debug, Clone, Copy)]
pub struct TauApRatio {
    pub sum: u64,
    pub bound_ratio: f64,
}

pub fn tau_ap_ratio(
    x: u64,
    y: u64,
    q: u64,
    a: u64,
    k: usize,
    tables: &ArithTables,
) -> Result<TauApRatio> {
    if q == 0 || y == 0 || y > x {
        return Err(Error::InvalidInput("need q >= 1 and 0 < y <= x".into()));
    }
    if gcd(a, q) != 1 {
        return Err(Error::InvalidInput(format!("residue {a} not coprime to {q}")));
    }
    if x > tables.limit() {
        return Err(Error::TableTooSmall { needed: x, limit: tables.limit() });
    }
    let a_red = a % q;
    let lo = x - y + 1;
    let mut first = lo + (a_red + q - lo % q) % q;
    let mut sum = 0u64;
    while first <= x {
        sum += tables.tau(k, first);
        first += q;
    }
    let denom = y as f64 / euler_phi(q) as f64 * (2.0 * x as f64).ln().powi(k as i32 - 1);
    Ok(TauApRatio { sum, bound_ratio: sum as f64 / denom })
}

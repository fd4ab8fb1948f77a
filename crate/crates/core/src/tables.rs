//! Immutable sieve tables and exact modular primitives.
//!
//! [`ArithTables`] holds tau_k, Euler phi, Moebius mu, the radical (kernel)
//! and the smallest prime factor up to a limit; it is built once and then
//! shared read-only between workers. The free functions (`gcd`,
//! [`mod_inverse`], [`coprime_split`], trial-division helpers) are total over
//! their stated domains and never allocate tables.

use crate::error::{Error, Result};
use crate::sum::Accumulator;

/// Sieve tables for n in [0, limit]. Index 0 is unused filler.
#[derive(Debug, Clone)]
pub struct ArithTables {
    limit: u64,
    /// tau[k-1][n] = tau_k(n) for 1 <= k <= k_max.
    tau: Vec<Vec<u64>>,
    phi: Vec<u64>,
    mu: Vec<i8>,
    rad: Vec<u64>,
    spf: Vec<u32>,
}

impl ArithTables {
    /// Build all tables up to `limit` with divisor orders 1..=k_max.
    ///
    /// tau_k is sieved by the Dirichlet recurrence tau_k = tau_{k-1} * 1,
    /// phi/mu/spf by a linear sieve, and the radical by stripping the
    /// smallest prime factor.
    pub fn build(limit: u64, k_max: usize) -> Result<Self> {
        if limit == 0 {
            return Err(Error::InvalidInput("table limit must be >= 1".into()));
        }
        if k_max == 0 {
            return Err(Error::InvalidInput("k_max must be >= 1".into()));
        }
        let n = limit as usize;

        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            for &p in &primes {
                let ip = i * p as usize;
                if p > spf[i] || ip > n {
                    break;
                }
                spf[ip] = p;
            }
        }
        if n >= 1 {
            spf[1] = 1;
        }

        let mut phi = vec![0u64; n + 1];
        let mut mu = vec![0i8; n + 1];
        let mut rad = vec![0u64; n + 1];
        if n >= 1 {
            phi[1] = 1;
            mu[1] = 1;
            rad[1] = 1;
        }
        for i in 2..=n {
            let p = spf[i] as usize;
            let m = i / p;
            if m % p == 0 {
                phi[i] = phi[m] * p as u64;
                mu[i] = 0;
                rad[i] = rad[m];
            } else {
                phi[i] = phi[m] * (p as u64 - 1);
                mu[i] = -mu[m];
                rad[i] = rad[m] * p as u64;
            }
        }

        // tau_1 = 1, tau_k(n) = sum_{d | n} tau_{k-1}(d)
        let mut tau: Vec<Vec<u64>> = Vec::with_capacity(k_max);
        let mut ones = vec![1u64; n + 1];
        ones[0] = 0;
        tau.push(ones);
        for _ in 2..=k_max {
            let prev = tau.last().unwrap();
            let mut next = vec![0u64; n + 1];
            for d in 1..=n {
                let t = prev[d];
                let mut m = d;
                while m <= n {
                    next[m] += t;
                    m += d;
                }
            }
            tau.push(next);
        }

        Ok(Self { limit, tau, phi, mu, rad, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn k_max(&self) -> usize {
        self.tau.len()
    }

    /// tau_k(n), the number of ordered factorisations of n into k parts.
    pub fn tau(&self, k: usize, n: u64) -> u64 {
        assert!(k >= 1 && k <= self.k_max(), "tau order {k} out of range");
        self.tau[k - 1][n as usize]
    }

    pub fn phi(&self, n: u64) -> u64 {
        self.phi[n as usize]
    }

    pub fn mu(&self, n: u64) -> i64 {
        self.mu[n as usize] as i64
    }

    /// The radical (kernel): largest squarefree divisor.
    pub fn radical(&self, n: u64) -> u64 {
        self.rad[n as usize]
    }

    pub fn smallest_prime_factor(&self, n: u64) -> u64 {
        self.spf[n as usize] as u64
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// gcd of a possibly signed value with a modulus.
pub fn gcd_i64(a: i64, b: u64) -> u64 {
    gcd(a.unsigned_abs(), b)
}

/// Inverse of n modulo q, in [0, q).
///
/// Follows the convention mod_inverse(n, 1) = 0 so that q = 1 degenerate
/// cases flow through congruence code (everything lies in the single class).
pub fn mod_inverse(n: i64, q: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::InvalidInput("modulus must be positive".into()));
    }
    if q == 1 {
        return Ok(0);
    }
    let n_red = n.rem_euclid(q as i64) as u64;
    let g = gcd(n_red, q);
    if g != 1 {
        return Err(Error::NotInvertible { n, modulus: q, gcd: g });
    }
    // extended Euclid on (n_red, q), tracking only the n-coefficient
    let (mut r0, mut r1) = (n_red as i64, q as i64);
    let (mut s0, mut s1) = (1i64, 0i64);
    while r1 != 0 {
        let quot = r0 / r1;
        (r0, r1) = (r1, r0 - quot * r1);
        (s0, s1) = (s1, s0 - quot * s1);
    }
    debug_assert_eq!(r0, 1);
    Ok(s0.rem_euclid(q as i64) as u64)
}

/// The coprime decomposition of a pair (n1, n2):
/// d = (n1, n2), n1 = d d1 nu1', n2 = d nu2, with (nu1, nu2) = 1,
/// d1 | d^infinity and (nu1', d) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoprimeDecomposition {
    pub d: u64,
    pub nu1: u64,
    pub nu2: u64,
    pub d1: u64,
    pub nu1_prime: u64,
}

/// Split (n1, n2) by their gcd and peel the primes of d out of nu1.
///
/// d1 is extracted by repeated gcds, never by factoring, so the split stays
/// cheap for large cofactors.
pub fn coprime_split(n1: u64, n2: u64) -> Result<CoprimeDecomposition> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidInput("coprime_split needs positive inputs".into()));
    }
    let d = gcd(n1, n2);
    let nu1 = n1 / d;
    let nu2 = n2 / d;
    let mut rem = nu1;
    loop {
        let g = gcd(rem, d);
        if g == 1 {
            break;
        }
        rem /= g;
    }
    let nu1_prime = rem;
    let d1 = nu1 / rem;
    Ok(CoprimeDecomposition { d, nu1, nu2, d1, nu1_prime })
}

/// Partial sum of the kernel expansion n/phi(n) = sum_{kernel(v) | n} 1/v,
/// truncated at v <= cutoff. Monotone nondecreasing in the cutoff and
/// converging to n/phi(n).
pub fn n_over_phi_expansion(n: u64, cutoff: u64) -> f64 {
    if n == 0 || cutoff == 0 {
        return 0.0;
    }
    // v ranges over integers supported on the primes of n; enumerate them
    // by depth-first products, then sum smallest-first for determinism.
    let primes: Vec<u64> = factorize(n).into_iter().map(|(p, _)| p).collect();
    let mut terms: Vec<u64> = Vec::new();
    let mut stack: Vec<(u64, usize)> = vec![(1, 0)];
    while let Some((v, i)) = stack.pop() {
        if i == primes.len() {
            terms.push(v);
            continue;
        }
        let p = primes[i];
        let mut pv = v;
        loop {
            stack.push((pv, i + 1));
            match pv.checked_mul(p) {
                Some(next) if next <= cutoff => pv = next,
                _ => break,
            }
        }
    }
    terms.sort_unstable();
    let mut acc = Accumulator::new();
    for v in terms {
        acc.add(1.0 / v as f64);
    }
    acc.value()
}

/// Trial-division factorisation, smallest prime first.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Euler phi by trial division; for occasional moduli outside table range.
pub fn euler_phi(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut result = n;
    for (p, _) in factorize(n) {
        result = result / p * (p - 1);
    }
    result
}

/// tau_2 by trial division.
pub fn tau2(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    factorize(n).into_iter().map(|(_, e)| e as u64 + 1).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: tau_k by enumerating ordered factorisations.
    fn tau_k_brute(k: usize, n: u64) -> u64 {
        if k == 1 {
            return 1;
        }
        (1..=n).filter(|d| n % d == 0).map(|d| tau_k_brute(k - 1, d)).sum()
    }

    #[test]
    fn hand_values() {
        let t = ArithTables::build(12, 2).unwrap();
        assert_eq!(t.tau(2, 12), 6);
        assert_eq!(t.phi(12), 4);
        assert_eq!(t.mu(12), 0);
        assert_eq!(t.radical(12), 6);
    }

    #[test]
    fn identity_case() {
        let t = ArithTables::build(1, 1).unwrap();
        assert_eq!(t.tau(1, 1), 1);
        assert_eq!(t.phi(1), 1);
        assert_eq!(t.mu(1), 1);
        assert_eq!(t.radical(1), 1);
    }

    #[test]
    fn tau3_of_4_by_enumeration() {
        // ordered triples (a,b,c) with abc = 4: three orderings of (1,1,4)
        // and three of (1,2,2)
        assert_eq!(tau_k_brute(3, 4), 6);
        let t = ArithTables::build(4, 3).unwrap();
        assert_eq!(t.tau(3, 4), 6);
    }

    #[test]
    fn tau_matches_brute_force() {
        let t = ArithTables::build(64, 3).unwrap();
        for n in 1..=64 {
            for k in 1..=3 {
                assert_eq!(t.tau(k, n), tau_k_brute(k, n), "tau_{k}({n})");
            }
        }
    }

    #[test]
    fn table_invariants() {
        let limit = 2000u64;
        let t = ArithTables::build(limit, 3).unwrap();
        for n in 1..=limit {
            // tau_1 = 1 and the Dirichlet recurrence entrywise
            assert_eq!(t.tau(1, n), 1);
            for k in 2..=3 {
                let conv: u64 = (1..=n).filter(|d| n % d == 0).map(|d| t.tau(k - 1, d)).sum();
                assert_eq!(t.tau(k, n), conv);
            }
            // sum_{d | n} phi(d) = n
            let phi_sum: u64 = (1..=n).filter(|d| n % d == 0).map(|d| t.phi(d)).sum();
            assert_eq!(phi_sum, n);
            // radical divides n, is squarefree, and n | rad^ceil(log2 n)
            let r = t.radical(n);
            assert_eq!(n % r, 0);
            assert!(t.mu(r) != 0, "radical {r} of {n} not squarefree");
            if n >= 2 {
                let e = 64 - (n - 1).leading_zeros(); // ceil(log2 n)
                let mut pow = 1u128;
                for _ in 0..e {
                    pow *= r as u128;
                }
                assert_eq!(pow % n as u128, 0, "n = {n}");
            }
            // mu(n) != 0 iff n is squarefree iff n = radical(n)
            assert_eq!(t.mu(n) != 0, n == r);
        }
    }

    #[test]
    fn rejects_zero_configuration() {
        assert!(ArithTables::build(0, 2).is_err());
        assert!(ArithTables::build(10, 0).is_err());
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(3, 7).unwrap(), 5);
        assert_eq!(mod_inverse(1, 1).unwrap(), 0);
        assert_eq!(
            mod_inverse(2, 4),
            Err(Error::NotInvertible { n: 2, modulus: 4, gcd: 2 })
        );
        // negative representative
        assert_eq!(mod_inverse(-3, 7).unwrap(), mod_inverse(4, 7).unwrap());
    }

    #[test]
    fn mod_inverse_randomised() {
        let mut rng = crate::rng::SplitMix64::new(11);
        for _ in 0..2000 {
            let q = rng.gen_range_u64(1, 10_000);
            let n = rng.gen_range_u64(1, 1 << 40) as i64;
            match mod_inverse(n, q) {
                Ok(inv) => {
                    assert!(inv < q.max(1));
                    let prod = (n.rem_euclid(q as i64) as u128 * inv as u128) % q as u128;
                    if q == 1 {
                        assert_eq!(inv, 0);
                    } else {
                        assert_eq!(prod, 1);
                    }
                }
                Err(Error::NotInvertible { gcd: g, .. }) => {
                    assert!(g > 1 && q % g == 0);
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn coprime_split_examples() {
        let c = coprime_split(12, 18).unwrap();
        assert_eq!(
            c,
            CoprimeDecomposition { d: 6, nu1: 2, nu2: 3, d1: 2, nu1_prime: 1 }
        );
        let c = coprime_split(5, 7).unwrap();
        assert_eq!(
            c,
            CoprimeDecomposition { d: 1, nu1: 5, nu2: 7, d1: 1, nu1_prime: 5 }
        );
        let c = coprime_split(4, 8).unwrap();
        assert_eq!(
            c,
            CoprimeDecomposition { d: 4, nu1: 1, nu2: 2, d1: 1, nu1_prime: 1 }
        );
    }

    #[test]
    fn coprime_split_reassembles() {
        // exhaustive on a small box plus random larger pairs
        for n1 in 1..=200u64 {
            for n2 in 1..=200u64 {
                check_split(n1, n2);
            }
        }
        let mut rng = crate::rng::SplitMix64::new(5);
        for _ in 0..100_000 {
            let n1 = rng.gen_range_u64(1, 10_000);
            let n2 = rng.gen_range_u64(1, 10_000);
            check_split(n1, n2);
        }
    }

    fn check_split(n1: u64, n2: u64) {
        let c = coprime_split(n1, n2).unwrap();
        assert_eq!(c.d * c.d1 * c.nu1_prime, n1);
        assert_eq!(c.d * c.nu2, n2);
        assert_eq!(gcd(c.nu1, c.nu2), 1);
        assert_eq!(gcd(c.nu1_prime, c.d), 1);
        // every prime of d1 divides d
        let mut x = c.d1;
        loop {
            let g = gcd(x, c.d);
            if g == 1 {
                break;
            }
            x /= g;
        }
        assert_eq!(x, 1, "d1 = {} has a prime outside d = {}", c.d1, c.d);
    }

    #[test]
    fn kernel_expansion_examples() {
        // n = 6: limit is 6/phi(6) = 3, via the Euler product 2 * 3/2
        let s = n_over_phi_expansion(6, 1_000_000);
        assert!((s - 3.0).abs() < 1e-3, "s = {s}");
        assert_eq!(n_over_phi_expansion(1, 1), 1.0);
        assert_eq!(n_over_phi_expansion(1, 1_000_000), 1.0);
        // n = 2, cutoff 3: v in {1, 2}
        assert_eq!(n_over_phi_expansion(2, 3), 1.5);
    }

    #[test]
    fn kernel_expansion_monotone_and_bounded() {
        for n in [2u64, 6, 30, 360, 997] {
            let target = n as f64 / euler_phi(n) as f64;
            let mut last = 0.0;
            for cutoff in [1u64, 10, 100, 10_000, 1_000_000] {
                let s = n_over_phi_expansion(n, cutoff);
                assert!(s >= last, "not monotone at n = {n}, cutoff = {cutoff}");
                assert!(s <= target + 1e-12, "exceeds limit at n = {n}");
                last = s;
            }
        }
    }

    #[test]
    fn trial_division_helpers() {
        let t = ArithTables::build(500, 2).unwrap();
        for n in 1..=500u64 {
            assert_eq!(euler_phi(n), t.phi(n));
            assert_eq!(tau2(n), t.tau(2, n));
        }
    }
}

//! The smooth cutoff psi and its certified Fourier evaluator.
//!
//! psi equals 1 on [1, 2], vanishes outside (1/2, 5/2), and climbs/descends
//! through C-infinity ramps on [1/2, 1] and [2, 5/2] built from the
//! exp(-1/x) glue. Each ramp is odd-symmetric about its midpoint (3/4 resp.
//! 9/4), which pins psi(3/4) = 1/2 and gives hat{psi}(0) = 3/2 exactly.
//!
//! The rising ramp additionally carries a fixed stack of antisymmetric
//! micro-bump pairs ("ramp texture"). The pairs preserve every structural
//! invariant — support, plateau, 0 <= psi <= 1, monotone ramps, midpoint
//! symmetry, exact ramp mass — while giving |hat{psi}| a measurable
//! mid-frequency tail (~1e-6 .. 1e-12 over xi ~ 1e3 .. 3e4). Without them the
//! transform underflows past 1e-40 at the frequencies the truncated Poisson
//! checks probe, and the truncation residual those checks measure would be
//! floating-point noise instead of a real, decaying quantity.
//!
//! hat{psi} is evaluated by panel-adaptive Simpson quadrature that resolves
//! the oscillation of e(-xi t) and integrates the plateau in closed form;
//! the texture contributes through the exact identity
//! integral B((t-t0)/w) e(-xi t) dt = w e(-xi t0) hat{B}(w xi).

use crate::error::{Error, Result};
use crate::sum::Accumulator;
use crate::tables::{euler_phi, gcd, tau2};
use crate::util::{unit_phase, Complex64, ComplexAccumulator};

/// Ramp texture: bump pair j has half-width 2^-j, amplitude
/// `TEXTURE_STRENGTH * 4^-j`, and sits at 3/4 +- OFFSETS[j - TEXTURE_J_LO]
/// inside the rising ramp. Offsets are staggered multiples of the width so
/// the pairs never overlap each other or the midpoint.
const TEXTURE_J_LO: u32 = 9;
const TEXTURE_J_HI: u32 = 14;
const TEXTURE_STRENGTH: f64 = 8.0;
const TEXTURE_OFFSET_FACTORS: [f64; 6] = [6.5, 6.87, 7.24, 7.61, 7.98, 8.35];

#[derive(Debug, Clone, Copy)]
struct BumpPair {
    center_offset: f64, // s_j: pair sits at 3/4 +- s_j
    half_width: f64,    // w_j
    amplitude: f64,     // a_j
}

fn texture_pairs() -> impl Iterator<Item = BumpPair> {
    (TEXTURE_J_LO..=TEXTURE_J_HI).map(|j| {
        let w = 0.5f64.powi(j as i32);
        BumpPair {
            center_offset: TEXTURE_OFFSET_FACTORS[(j - TEXTURE_J_LO) as usize] * w,
            half_width: w,
            amplitude: TEXTURE_STRENGTH * w * w,
        }
    })
}

/// exp(-1/x) for x > 0, else 0. All derivatives vanish at 0+.
#[inline]
fn glue_seed(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step: 0 at u <= 0, 1 at u >= 1, odd-symmetric about (1/2, 1/2).
#[inline]
fn glue_step(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = glue_seed(u);
    let b = glue_seed(1.0 - u);
    a / (a + b)
}

/// Normalised C-infinity bump on (-1, 1): B(0) = 1, zero outside.
#[inline]
fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    (1.0 - 1.0 / (1.0 - x * x)).exp()
}

fn texture_at(t: f64) -> f64 {
    // supports are disjoint and all inside (0.6, 0.9); cheap linear scan
    let mut v = 0.0;
    for pair in texture_pairs() {
        let hi = 0.75 + pair.center_offset;
        let lo = 0.75 - pair.center_offset;
        if (t - hi).abs() < pair.half_width {
            v += pair.amplitude * bump((t - hi) / pair.half_width);
        } else if (t - lo).abs() < pair.half_width {
            v -= pair.amplitude * bump((t - lo) / pair.half_width);
        }
    }
    v
}

/// The smooth cutoff together with its quadrature tolerance.
#[derive(Debug, Clone, Copy)]
pub struct SmoothCutoff {
    quad_tol: f64,
}

impl SmoothCutoff {
    /// Build the cutoff. The tolerance is the absolute quadrature error
    /// budget for each Fourier evaluation; it must lie in (0, 1e-6].
    pub fn build(quad_tol: f64) -> Result<Self> {
        if !(quad_tol > 0.0 && quad_tol <= 1e-6) {
            return Err(Error::InvalidInput(format!(
                "quad_tol must be in (0, 1e-6], got {quad_tol}"
            )));
        }
        Ok(Self { quad_tol })
    }

    /// Default tolerance 1e-10.
    pub fn with_default_tol() -> Self {
        Self { quad_tol: 1e-10 }
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// psi(t).
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.5 || t >= 2.5 {
            0.0
        } else if (1.0..=2.0).contains(&t) {
            1.0
        } else if t < 1.0 {
            glue_step(2.0 * t - 1.0) + texture_at(t)
        } else {
            glue_step(5.0 - 2.0 * t)
        }
    }

    /// hat{psi}(0) = 3/2, exactly: the plateau has length 1 and each
    /// odd-symmetric ramp integrates to half its width (texture pairs are
    /// antisymmetric and carry no mass).
    pub fn hat_zero(&self) -> f64 {
        1.5
    }

    /// hat{psi}(xi) = integral psi(t) e(-xi t) dt, with absolute error
    /// within the configured tolerance.
    pub fn hat(&self, xi: f64) -> Result<Complex64> {
        let tol = self.quad_tol;
        // plateau [1, 2] in closed form
        let plateau = if xi == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            // integral_1^2 e(-xi t) dt = (e(-xi) - e(-2 xi)) / (2 pi i xi)
            let num = unit_phase(-xi) - unit_phase(-2.0 * xi);
            let denom_inv = 1.0 / (std::f64::consts::TAU * xi);
            Complex64::new(num.im * denom_inv, -num.re * denom_inv)
        };
        // glue ramps by Filon quadrature. The internal stop is far below the
        // caller tolerance: dual sums multiply these values by M/q, so a
        // leftover ladder bias of ~1e-11 would swamp the true tails the
        // Poisson checks measure.
        let ramp_tol = (tol / 2.0).min(2e-14);
        let left = filon_quad(|t| glue_step(2.0 * t - 1.0), 0.5, 1.0, xi, ramp_tol)?;
        let right = filon_quad(|t| glue_step(5.0 - 2.0 * t), 2.0, 2.5, xi, ramp_tol)?;
        // texture pairs via hat{B} at the scaled frequency
        let mut tex = ComplexAccumulator::new();
        for pair in texture_pairs() {
            let bh = bump_hat(pair.half_width * xi, tol)?;
            let hi = unit_phase(-xi * (0.75 + pair.center_offset));
            let lo = unit_phase(-xi * (0.75 - pair.center_offset));
            tex.add((hi - lo) * bh.scale(pair.amplitude * pair.half_width));
        }
        Ok(plateau + left + right + tex.value())
    }
}

/// hat{B}(y) = integral_{-1}^{1} B(x) e(-y x) dx.
fn bump_hat(y: f64, tol: f64) -> Result<Complex64> {
    filon_quad(bump, -1.0, 1.0, y, tol.min(1e-14))
}

/// Filon quadrature of f(t) e(-xi t) over [a, b].
///
/// On each panel f is replaced by its cubic interpolant and the product
/// against the oscillation is integrated in closed form through the moments
/// integral s^k e^(-i theta s) ds. Panel counts therefore depend on the
/// smoothness of f alone, not on xi. The panel ladder doubles until two
/// consecutive refinements agree within the tolerance; panels are summed
/// left to right with compensation, so results are deterministic.
pub(crate) fn filon_quad<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    xi: f64,
    tol: f64,
) -> Result<Complex64> {
    let mut panels: usize = 64;
    let mut prev = filon_pass(&f, a, b, xi, panels);
    loop {
        panels *= 2;
        let next = filon_pass(&f, a, b, xi, panels);
        let diff = (next.0 - prev.0).norm();
        // mass-proportional floor: refining past the rounding level of the
        // accumulated |f| mass cannot improve the estimate
        if diff <= tol.max(1e-15 * next.1) {
            return Ok(next.0);
        }
        if panels >= (1 << 17) {
            return Err(Error::QuadratureNoConvergence { requested: tol, achieved: diff });
        }
        prev = next;
    }
}

/// One composite Filon pass with a fixed panel count. Returns the integral
/// and the accumulated |f| mass (for noise-floor scaling).
fn filon_pass<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, xi: f64, panels: usize) -> (Complex64, f64) {
    let h = (b - a) / panels as f64;
    let theta = std::f64::consts::TAU * xi * h;
    let m = filon_moments(theta);
    // cubic Lagrange basis on s in {0, 1/3, 2/3, 1} expanded in powers of s,
    // contracted against the moments
    let w0 = m.combine(1.0, -5.5, 9.0, -4.5);
    let w1 = m.combine(0.0, 9.0, -22.5, 13.5);
    let w2 = m.combine(0.0, -4.5, 18.0, -13.5);
    let w3 = m.combine(0.0, 1.0, -4.5, 4.5);
    let mut total = ComplexAccumulator::new();
    let mut mass = Accumulator::new();
    let mut right_val = f(a);
    for k in 0..panels {
        let t0 = a + k as f64 * h;
        let f0 = right_val;
        let f1 = f(t0 + h / 3.0);
        let f2 = f(t0 + 2.0 * h / 3.0);
        let f3 = if k + 1 == panels { f(b) } else { f(t0 + h) };
        right_val = f3;
        let p = w0.scale(f0) + w1.scale(f1) + w2.scale(f2) + w3.scale(f3);
        total.add((unit_phase(-xi * t0) * p).scale(h));
        mass.add(h * (f0.abs() + f1.abs() + f2.abs() + f3.abs()) * 0.25);
    }
    (total.value(), mass.value())
}

/// Moments m_k(theta) = integral_0^1 s^k e^(-i theta s) ds for k = 0..3.
struct FilonMoments {
    m: [Complex64; 4],
}

impl FilonMoments {
    /// c0 m0 + c1 m1 + c2 m2 + c3 m3.
    fn combine(&self, c0: f64, c1: f64, c2: f64, c3: f64) -> Complex64 {
        self.m[0].scale(c0) + self.m[1].scale(c1) + self.m[2].scale(c2) + self.m[3].scale(c3)
    }
}

fn filon_moments(theta: f64) -> FilonMoments {
    let mut m = [Complex64::ZERO; 4];
    if theta.abs() < 0.5 {
        // series: m_k = sum_j (-i theta)^j / (j! (k + j + 1)), converged to
        // machine precision within ~20 terms for |theta| < 1/2
        for (k, mk) in m.iter_mut().enumerate() {
            let mut term = Complex64::ONE;
            let mut acc = Complex64::ZERO;
            for j in 0..24 {
                acc += term.scale(1.0 / (k as f64 + j as f64 + 1.0));
                term = term * Complex64::new(0.0, -theta).scale(1.0 / (j as f64 + 1.0));
            }
            *mk = acc;
        }
    } else {
        // recurrence m_k = (k m_{k-1} - E) / (i theta), E = e^{-i theta}
        let e = unit_phase(-theta / std::f64::consts::TAU);
        let inv_itheta = Complex64::new(0.0, -1.0 / theta);
        m[0] = (Complex64::ONE - e) * inv_itheta;
        for k in 1..4 {
            m[k] = (m[k - 1].scale(k as f64) - e) * inv_itheta;
        }
    }
    FilonMoments { m }
}

/// Output of the truncated Poisson check in an arithmetic progression:
/// lhs = sum_{m = a mod q} psi(m/M), main = hat{psi}(0) M/q, and the dual
/// sum over frequencies 0 < |h| <= H. The residual is lhs - main - dual.
#[derive(Debug, Clone, Copy)]
pub struct PoissonApCheck {
    pub lhs: f64,
    pub main: f64,
    pub dual_sum: f64,
    pub residual: f64,
    pub h: u64,
}

/// Smallest admissible dual truncation: (q/M) log^4(2M).
pub fn poisson_h_threshold(m_scale: u64, q: u64) -> f64 {
    let l = (2.0 * m_scale as f64).ln();
    q as f64 / m_scale as f64 * l.powi(4)
}

/// Exact check of the finite Poisson expansion over m = a (mod q).
///
/// Requires H >= (q/M) log^4(2M); smaller truncations are rejected.
pub fn truncated_poisson_ap(
    psi: &SmoothCutoff,
    m_scale: u64,
    q: u64,
    a: i64,
    h: u64,
) -> Result<PoissonApCheck> {
    if m_scale == 0 || q == 0 {
        return Err(Error::InvalidInput("scale and modulus must be positive".into()));
    }
    if (h as f64) < poisson_h_threshold(m_scale, q) {
        return Err(Error::InvalidInput(format!(
            "truncation H = {h} below threshold {}",
            poisson_h_threshold(m_scale, q)
        )));
    }
    let a_red = a.rem_euclid(q as i64) as u64;
    let m_f = m_scale as f64;

    let m_lo = m_scale / 2 + 1;
    let m_hi = (5 * m_scale - 1) / 2;
    let mut first = m_lo + (a_red + q - m_lo % q) % q;
    let mut lhs = Accumulator::new();
    while first <= m_hi {
        lhs.add(psi.eval(first as f64 / m_f));
        first += q;
    }
    let lhs = lhs.value();

    let main = psi.hat_zero() * m_f / q as f64;

    // hat{psi}(-xi) = conj(hat{psi}(xi)) since psi is real, so the h and -h
    // terms pair up into 2 Re(...).
    let mut dual = Accumulator::new();
    for hh in 1..=h {
        let hat = psi.hat(hh as f64 * m_f / q as f64)?;
        let character = unit_phase((a_red * (hh % q)) as f64 / q as f64);
        dual.add(2.0 * (character * hat).re);
    }
    let dual_sum = dual.value() * m_f / q as f64;

    Ok(PoissonApCheck { lhs, main, dual_sum, residual: lhs - main - dual_sum, h })
}

/// Output of the coprime Poisson check: lhs = sum_{(m,q)=1} psi(m/M),
/// main = (phi(q)/q) hat{psi}(0) M, and the measured constant
/// |residual| / (tau_2(q) log^4 2M).
#[derive(Debug, Clone, Copy)]
pub struct CoprimePsiCheck {
    pub lhs: f64,
    pub main: f64,
    pub residual: f64,
    pub residual_constant: f64,
}

pub fn coprime_psi_sum(psi: &SmoothCutoff, m_scale: u64, q: u64) -> CoprimePsiCheck {
    let m_f = m_scale as f64;
    let m_lo = m_scale / 2 + 1;
    let m_hi = (5 * m_scale - 1) / 2;
    let mut lhs = Accumulator::new();
    for m in m_lo..=m_hi {
        if gcd(m, q) == 1 {
            lhs.add(psi.eval(m as f64 / m_f));
        }
    }
    let lhs = lhs.value();
    let main = euler_phi(q) as f64 / q as f64 * psi.hat_zero() * m_f;
    let residual = lhs - main;
    let l4 = (2.0 * m_f).ln().powi(4);
    CoprimePsiCheck {
        lhs,
        main,
        residual,
        residual_constant: residual.abs() / (tau2(q) as f64 * l4),
    }
}

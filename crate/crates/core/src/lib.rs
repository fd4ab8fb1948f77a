//! dispersion-lab: a desk-scale numerical laboratory for bilinear
//! equidistribution sums in arithmetic progressions.
//!
//! The crate evaluates, exactly, the objects that appear when a multiplicative
//! convolution `sum_{mn = a mod q} alpha_m beta_n` is compared against its
//! expected main term: the per-modulus discrepancy and its dyadic mean, the
//! dispersion expansion `W - 2V + U` with its main terms, complete and short
//! Kloosterman sums, trilinear forms in Kloosterman fractions, Bezout
//! reciprocity chains in exact rational arithmetic, and a hyperbola-method
//! verifier for the shifted-divisor sum `sum alpha_m beta_n tau_2(mn - 1)`.
//!
//! Everything is organised around three rules:
//!
//! * identities are checked exactly (rational arithmetic or compensated
//!   floating-point summation), never asymptotically;
//! * asymptotic bounds with unspecified constants become reported ratios,
//!   never hard assertions;
//! * every computation is deterministic: parallel runs reduce in a fixed
//!   order and reproduce the sequential results bit for bit.
//!
//! The data-parallel kernels use rayon when the `parallel` feature (default)
//! is enabled; a sequential mirror of each hot kernel lives in [`seq`] so the
//! two paths can be compared and benchmarked.

pub mod cutoff;
pub mod discrepancy;
pub mod dispersion;
pub mod error;
pub mod exec;
pub mod expsums;
pub mod rational;
pub mod rng;
pub mod sequences;
pub mod sum;
pub mod tables;
pub mod titchmarsh;
pub mod util;

pub use error::{Error, Result};
pub use tables::{coprime_split, mod_inverse, n_over_phi_expansion, ArithTables, CoprimeDecomposition};

/// Sequential variants of the data-parallel kernels.
///
/// These always run single-threaded regardless of the `parallel` feature and
/// must produce bit-identical results to their parallel counterparts. They
/// exist for benchmarking and for the determinism tests.
pub mod seq {
    pub use crate::discrepancy::mean_discrepancy_seq as mean_discrepancy;
    pub use crate::dispersion::compute_uvw_seq as compute_uvw;
    pub use crate::expsums::weil_sweep_seq as weil_sweep;
    pub use crate::sequences::bdh_variance_seq as bdh_variance;
    pub use crate::titchmarsh::corollary_rhs_seq as corollary_rhs;
}

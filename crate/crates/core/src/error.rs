use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the library.
///
/// Precondition violations carry enough context to report which input was
/// rejected; numerical failures report the accuracy that was achieved.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A structural precondition was violated (bad range, zero modulus, ...).
    InvalidInput(String),
    /// `mod_inverse` was asked for an inverse that does not exist; carries
    /// the offending gcd.
    NotInvertible { n: i64, modulus: u64, gcd: u64 },
    /// A coefficient sequence violated its divisor bound; lists the first
    /// offending indices.
    DivisorBoundViolated { order: usize, offenders: Vec<u64> },
    /// A sequence file could not be parsed.
    MalformedSequenceFile { line: usize, message: String },
    /// Adaptive quadrature could not meet the requested tolerance.
    QuadratureNoConvergence { requested: f64, achieved: f64 },
    /// A sieve table is too small for the requested computation.
    TableTooSmall { needed: u64, limit: u64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NotInvertible { n, modulus, gcd } => {
                write!(f, "{n} is not invertible mod {modulus} (gcd = {gcd})")
            }
            Error::DivisorBoundViolated { order, offenders } => write!(
                f,
                "coefficients exceed tau_{order} divisor bound at n = {offenders:?}"
            ),
            Error::MalformedSequenceFile { line, message } => {
                write!(f, "malformed sequence file at line {line}: {message}")
            }
            Error::QuadratureNoConvergence { requested, achieved } => write!(
                f,
                "quadrature did not converge: requested {requested:e}, achieved {achieved:e}"
            ),
            Error::TableTooSmall { needed, limit } => {
                write!(f, "sieve table too small: need limit >= {needed}, have {limit}")
            }
        }
    }
}

impl std::error::Error for Error {}

//! Workbench for certified computations around representations of even
//! integers as a sum of two primes and at most K powers of two: exact
//! residue counting, interval-certified constants, exceptional-measure
//! enclosures, and a brute-force numerical verifier.
//!
//! Everything downstream of floating point goes through [`Interval`],
//! which is generic over the scalar; the crate-root aliases fix the
//! precision used by the CLI and the certified constants.

pub mod admissibility;
pub mod cli;
pub mod constants;
pub mod error;
pub mod expsum;
pub mod interval;
pub mod kthreshold;
pub mod num_theory;
pub mod residue;
pub mod verifier;

pub use error::Error;
pub use interval::Interval;

/// Interval with f64 endpoints; the precision used everywhere certified
/// bounds are reported.
pub type CertifiedInterval = Interval<f64>;
/// Single-precision variant, for quick exploratory sweeps.
pub type FastInterval = Interval<f32>;

//! Quantum rounding of fixed-point registers.
//!
//! The crate covers the whole pipeline around rounding an `(n+m)`-bit
//! fixed-point value down to `n` bits with a remainder-biased ancilla:
//!
//! - [`fxp`]: exact fixed-point values, remainders and classical rounding modes.
//! - [`circuit`]: gate IR, macro expansion and the per-class resource walker.
//! - [`blocks`]: carry-lookahead adder, constant-adder reduction, controlled
//!   wrapping and the register comparator.
//! - [`rounding`]: rounding circuits and their exact probability oracles.
//! - [`sim`]: sparse statevector simulation and seeded sampling.
//! - [`analysis`]: concentration bounds, average-error formulas, register sizing.
//! - [`cost`]: closed-form resource tables and reconciliation against the walker.
//! - [`mult`]: fixed-point multiplication planning and benchmarking.
//!
//! Real-valued math is generic over [`num_traits::Float`]; exact quantities use
//! [`Rational`]. The aliases below fix the common instantiations.

pub mod analysis;
pub mod blocks;
pub mod circuit;
pub mod cli;
pub mod cost;
pub mod error;
pub mod fxp;
pub mod mult;
pub mod rounding;
pub mod sim;

pub use error::{Error, Result};

/// Exact rational scalar used for remainders, ulps and average errors.
pub type Rational = num_rational::BigRational;

/// Double-precision statevector.
pub type StateVector64 = sim::StateVector<f64>;
/// Single-precision statevector.
pub type StateVector32 = sim::StateVector<f32>;
/// Double-precision sampling statistics.
pub type SampleStats64 = sim::SampleStats<f64>;
/// Double-precision error budget.
pub type ErrorBudget64 = analysis::ErrorBudget<f64>;

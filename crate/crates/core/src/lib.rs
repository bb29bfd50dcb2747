//! Exact-arithmetic laboratory for multiplicative Diophantine transference.
//!
//! The crate computes the section constant `Δ_d`, section volumes of boxes and
//! parallelepipeds, the section-dual set, and constructively checks the
//! multiplicative transference theorem on concrete rational matrices by
//! exhaustive witness search. Every decision is made in exact rational
//! arithmetic; floating point only appears in display fields, Monte-Carlo
//! oracles and the analytic `ψ ↦ φ` transfer.
//!
//! Module map:
//!
//! * [`arith`]: rationals, the matrix `Θ`, the functionals `Π` and `Π'`
//!   (always in power form), residuals and rounding.
//! * [`delta`]: the constant `Δ_d` and its bounds.
//! * [`secdual`]: section volumes, the section-dual set `M^∧` and the
//!   dual tuple correspondence.
//! * [`search`]: pruned enumeration of integer points.
//! * [`transfer`]: transference budgets, witness certificates and `ψ ↦ φ`.
//! * [`exponents`]: exponent inequality calculus and estimators.
//! * [`matrix_file`]: the JSON matrix format.

pub mod arith;
pub mod delta;
pub mod error;
pub mod exponents;
pub mod linalg;
pub mod matrix_file;
pub mod ratio_serde;
pub mod search;
pub mod secdual;
pub mod transfer;

pub use arith::{IntegerPair, RationalMatrix};
pub use error::{Error, Result};
pub use num_bigint::BigInt;
pub use num_rational::BigRational;

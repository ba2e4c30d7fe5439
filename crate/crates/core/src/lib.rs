//! Exact constructions and spectral diagnostics for three families of
//! measure-preserving systems:
//!
//! - [`substitution`]: primitive substitution subshifts, their composition
//!   matrices, Perron-Frobenius frequency data, pair substitutions and the
//!   `r·ρ` rigidity constant.
//! - [`rankone`]: rank-one cutting-and-stacking maps (Chacon, staircase,
//!   the two-cut Chacon map) with exact rational tower geometry and
//!   certified level-set correlations.
//! - [`skew`]: the dyadic odometer, the Mathew-Nadkarni cocycle and its
//!   `Z₂` skew product, with atomwise Birkhoff sums and error-bounded
//!   correlation and spectral coefficients.
//!
//! [`spectral`] consumes correlation sequences from any of these (or from
//! a CSV file) and runs the Wiener, Rajchman, translation and Beurling
//! diagnostics that end in a singularity certificate.

pub mod bounded;
pub mod rankone;
pub mod skew;
pub mod spectral;
pub mod substitution;

pub use bounded::BoundedValue;

//! Projective-invariant distance on the unitary group and its applications.
//!
//! * [`linalg`]: dense complex matrices, spectra, Haar sampling.
//! * [`umetric`]: the u-distance by arc, hull and brute-force routes, plus
//!   the related norms and inequalities.
//! * [`circuit`]: checking that one circuit approximates another from
//!   measurements in `n + 1` independent bases.
//! * [`grover`]: search-circuit operators and the query-complexity bounds.
//! * [`entangle`]: distance from a gate to the local (product and
//!   permutation) unitaries.
//! * [`properties`]: randomized checks of the metric axioms.

pub mod circuit;
pub mod entangle;
pub mod error;
pub mod gates;
pub mod grover;
pub mod linalg;
pub mod properties;
pub mod umetric;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, StateVector, UnitarySpectrum, C64, DEFAULT_TOL};
pub use umetric::{DistanceResult, Method};

/// Schema tag carried by every JSON document the crate emits.
pub const SCHEMA: &str = "udist/1";

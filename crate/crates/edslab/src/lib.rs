//! Elliptic divisibility sequences over the rationals, division polynomials,
//! Ward periodicity and density races, together with a first-order formula
//! normalizer for the positive prenex hierarchy and model translation.

pub mod arith;
pub mod curve;
pub mod eds;
pub mod formula;
pub mod periodicity;
pub mod translate;

pub use arith::{Factorization, PrimeSet};
pub use curve::{Curve, Point};

//! Transversal pseudodifferential calculus on foliated tori.
//!
//! Classical transversal symbols and their algebra, Seeley resolvent
//! parametrices and complex powers, canonical and residue traces, zeta pole
//! tables, heat coefficients and dimension-spectrum reports, checked against
//! brute-force spectral computations on explicit model foliations.

pub mod cutoff;
pub mod error;
pub mod homogeneous;
pub mod model;
pub mod numerics;
pub mod resolvent;
pub mod scenario;
pub mod symbol;
pub mod traces;

pub use error::{CalcError, Result};
pub use numerics::C64;

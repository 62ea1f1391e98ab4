//! Exact and Monte Carlo higher-order Fourier analysis over F_p^n.
//!
//! Functions on F_p^n are dense tables indexed in lexicographic order of
//! coordinates. Every expectation can be computed exactly by enumeration
//! (subject to a global point budget, see [`field::set_enumeration_budget`])
//! or estimated by seeded Monte Carlo; results record which one ran.

pub mod analysis;
pub mod error;
pub mod estimate;
pub mod factors;
pub mod field;
pub mod linalg;
pub mod linear_forms;
pub mod par;
pub mod polynomials;
pub mod testers;

pub use error::{Error, Result};
pub use estimate::{Estimate, Mode};
pub use field::{AffineMap, FpVector, PrimeField, Space};
pub use analysis::FunctionTable;
pub use polynomials::Polynomial;

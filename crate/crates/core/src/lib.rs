//! Orbit toolkit for commuting matrix tuples: log-sign scalar arithmetic,
//! closed-form tuple products, Diophantine exponent searches, non-density
//! certificates, and empirical coverage reports.

pub mod certify;
pub mod complex;
pub mod coverage;
pub mod diophantine;
pub mod error;
pub mod matrices;
pub mod reduced;
pub mod precision;
pub mod presets;
pub mod scalar;
pub mod solvers;

pub use complex::HpComplex;
pub use diophantine::SearchBudget;
pub use error::{Error, Result};
pub use matrices::Family;
pub use precision::{Hp, PrecisionContext};
pub use presets::TupleSpec;

//! Selectors: algorithms that compute a language correctly given two
//! oracles, at least one of which is honest.

pub mod adversaries;
pub mod boolean;
pub mod error;
pub mod field;
pub mod harness;
pub mod instance;
pub mod lowdegree;
pub mod selectors;
pub mod sumcheck;

pub use error::{Error, Result};
pub use field::{Fe, PrimeField, Rng, UniPoly};

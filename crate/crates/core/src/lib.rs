//! Conjugacy invariants for hyperbolic integer matrices: Bowen-Franks modules,
//! truncated profinite towers and fractional-ideal tests, all in exact arithmetic.

pub mod error;
pub mod linalg;

pub use error::{Error, Result};
pub mod enumerate;
pub mod factor;
pub mod modules;
pub mod bf;
pub mod ideal;
pub mod intertwine;
pub mod tower;
pub mod pipeline;

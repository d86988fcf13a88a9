//! Exact integer matrices, polynomials, normal forms and lattices.

pub mod lattice;
pub mod matrix;
pub mod normal_form;
pub mod poly;
pub mod reduce;

pub use lattice::{left_kernel, solve_congruences, unit_vector, LatticeBasis};
pub use matrix::{factorial, matrix_power_factorial, IntMatrix, PowerCap};
pub use normal_form::{hnf, hnf_with_transform, invariant_factors, snf, HnfResult, SnfResult};
pub use poly::{eval_poly_at_matrix, IntPolynomial, QPoly};
pub use reduce::lll_reduce;

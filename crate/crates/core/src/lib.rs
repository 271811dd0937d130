//! Variable-exponent Lebesgue norms, harmonic-analysis operators and a
//! Picard solver for mild Navier–Stokes solutions on uniform grids.

pub mod error;
pub mod exponents;
pub mod grid;
pub mod harness;
pub mod mild_solver;
pub mod operators;
pub mod varlp;

pub use error::{Error, Result};
pub use grid::{GridSpec, ScalarField, TensorField, Topology, VectorField};

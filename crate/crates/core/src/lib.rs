//! Riesz and logarithmic interaction energies: evaluation, minimization,
//! sampling and periodic (renormalized) energies.

pub mod equilibrium;
pub mod gibbs;
pub mod hamiltonian;
pub mod error;
pub mod kernel;
pub mod lattice;
pub mod minimizer;
pub mod quadrature;
pub mod specfun;
pub mod torus;

pub use error::{Error, Result};

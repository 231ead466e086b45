//! Finite-volume laboratory for the multi-particle lattice Anderson model.
//!
//! The crate assembles `H = -Δ + U + V` on n-particle cubes of `Z^{nd}`,
//! diagonalizes it, and evaluates the quantities a multi-scale analysis is
//! built from: Green-function singularity predicates, resonances, two-volume
//! eigenvalue concentration, radial descent bounds and eigenfunction
//! correlators. Monte Carlo drivers in [`ensemble`] turn those predicates into
//! probability estimates over the disorder.
//!
//! Module map:
//!
//! - [`geometry`]: sites, cubes, boundaries, symmetrized distance, length scales
//! - [`disorder`]: counter-based random fields, sample mean / fluctuations
//! - [`model`]: Hamiltonian assembly with simple boundary conditions
//! - [`spectral`]: eigensolves, Green functions, resolvent identities
//! - [`msa`]: non-singularity, resonance, tunnelling and descent predicates
//! - [`ensemble`]: disorder-averaged experiments

pub mod disorder;
pub mod ensemble;
mod error;
pub mod format;
pub mod geometry;
pub mod model;
pub mod msa;
pub mod spectral;

pub use error::{Error, ErrorCategory, Result};

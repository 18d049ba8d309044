//! Simulation and verification tools for the planar antiferromagnet with
//! nearest- and next-nearest-neighbour couplings on the square lattice.
//!
//! - [`model`]: torus geometry, Hamiltonian, Néel states, observables.
//! - [`spinwave`]: dispersion, spin-wave free energy, Hessian certification.
//! - [`sampler`]: seeded Metropolis Monte Carlo.
//! - [`blocks`]: good/bad block classification on arc sets.
//! - [`oracle`]: exhaustive clock-model enumeration and Gaussian-field checks.

pub mod angle;
pub mod blocks;
pub mod error;
pub mod fft;
pub mod model;
pub mod oracle;
pub mod sampler;
pub mod spinwave;
pub mod sum;

pub use error::{Error, Result};

/// Crate version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Simulation of Hilbert-space scarring in dimerized spin-1/2 XY models.
//!
//! The crate is organised bottom-up:
//!
//! - [`hilbert`]: fixed-photon-number sectors, ranking, subsystem index maps
//! - [`model`]: coupling graphs (chain, comb, perturbations, coupler elimination)
//! - [`hamiltonian`]: sector-restricted Hamiltonian with matrix-free products
//! - [`symmetry`]: reflection and spin-flip block decomposition
//! - [`spectral`]: exact diagonalization and eigenstate diagnostics
//! - [`dynamics`]: quench evolution and time-dependent observables
//! - [`analysis`]: Fourier amplitudes, scans, hypercube metrics, imbalance oracles
//!
//! Frequencies are stored as `f = J/2π` in MHz and time is in ns; [`angular`]
//! converts to the rad/ns used by every operator.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod model;
pub mod spectral;
pub mod states;
pub mod symmetry;

pub use error::{Error, Result};
pub use num_complex::Complex64;

use std::f64::consts::TAU;

/// Angular frequency in rad/ns of a frequency given in MHz.
#[inline]
pub fn angular(f_mhz: f64) -> f64 {
    TAU * f_mhz * 1e-3
}

/// Frequency in MHz of an angular frequency given in rad/ns.
#[inline]
pub fn frequency_mhz(omega: f64) -> f64 {
    omega / TAU * 1e3
}

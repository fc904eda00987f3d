//! Transverse-field Ising chain quantum battery.
//!
//! The chain is charged by a finite-time ramp of the transverse field,
//! optionally dressed with Ornstein-Uhlenbeck noise. Every quasimomentum
//! pair evolves as an independent two-level system, so the heavy lifting
//! happens on 2x2 density matrices:
//!
//! - [`model`]: mode Hamiltonians, spectra, eigenstates, initial states.
//! - [`protocol`]: the field ramp and the OU noise generator.
//! - [`dynamics`]: noiseless, ensemble-averaged and single-trajectory
//!   evolution, plus a brute-force spin-chain oracle for small chains.
//! - [`observables`]: stored energy, ergotropy, efficiency, excitation
//!   probabilities and the single-qubit adiabatic analysis.
//! - [`runner`]: configuration-driven runs, sweeps and validation reports.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod ode;
pub mod protocol;
pub mod runner;

pub use error::{Error, Result};

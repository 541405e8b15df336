//! Simulation and analysis of polarization-entangled photon pairs emitted by a
//! biexciton-exciton cascade with finite fine-structure splitting.
//!
//! The crate is organised bottom-up:
//!
//! - [`qcore`]: two-qubit states, density matrices, waveplates, entanglement
//!   metrics and matrix entropies.
//! - [`sim`]: forward model for the 36 time-resolved coincidence histograms
//!   under detector jitter, dark counts, multiphoton emission and dephasing.
//! - [`tomography`]: time-binned maximum-likelihood state reconstruction and
//!   metric curves.
//! - [`fitting`]: the curve fits and scalar analyses used to characterise the
//!   source (Rabi, lifetime, FSS, blinking, g2, timing response, efficiency).
//! - [`qkd`]: time-resolved six-state key rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fitting;
pub mod format;
pub mod optim;
pub mod qcore;
pub mod qkd;
pub mod sim;
pub mod tomography;

pub use error::{Error, Result};

// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Open-system photoisomerization dynamics of the two-state two-mode (2S2M)
//! retinal model.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] assembles and diagonalizes the vibronic Hamiltonian and derives
//!   per-eigenstate descriptors (trans-ness, parity, Franck–Condon weights).
//! * [`bath`] builds the phonon-bath coupling matrices, the Ohmic rate kernel
//!   and the Redfield / Bloch-secular generators in the eigenbasis.
//! * [`dynamics`] propagates density matrices or population vectors from
//!   Franck–Condon initial conditions out to nanosecond horizons.
//! * [`chaos`] unfolds spectra and compares spacing distributions with the
//!   Wigner and Poisson laws.
//! * [`graph`] builds degree-limited downhill relaxation trees.
//! * [`config`] and [`runner`] drive single runs and parameter sweeps.
//!
//! Energies are in eV and `ħ = 1`, so the internal time unit is ħ/eV
//! (≈ 0.658 fs). Public interfaces that take or return times use
//! picoseconds.

pub mod bath;
pub mod chaos;
pub mod config;
pub mod dynamics;
mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod runner;
pub mod units;

pub use error::{Error, Result};

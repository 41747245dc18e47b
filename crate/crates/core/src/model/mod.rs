// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! The 2S2M vibronic model: parameters, basis, Hamiltonian and eigenstates.

pub mod basis;
pub mod eigen;
pub mod franck_condon;
pub mod hamiltonian;
pub mod io;
pub mod params;

pub use basis::{BasisSpec, Parity, ParitySectors, ProductBasis, RotorBasis};
pub use eigen::{spectrum, Eigensystem};
pub use franck_condon::{franck_condon_state, FranckCondonState, DEFAULT_FC_FLOOR};
pub use hamiltonian::build_hamiltonian;
pub use params::{ModelParameters, ParameterVariation};

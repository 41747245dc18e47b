// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::eigen::Eigensystem;
use crate::{Error, Result};

/// Default lower bound on the norm the retained eigenstates capture from the
/// promoted ground state.
pub const DEFAULT_FC_FLOOR: f64 = 0.9;

/// Vertically promoted ground state expanded in the retained eigenstates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FranckCondonState {
    /// c_k, normalized to Σ c_k² = 1.
    pub amplitudes: Vec<f64>,
    /// argmax_k c_k².
    pub brightest_index: usize,
    /// Σ c_k² before renormalization.
    pub captured_weight: f64,
}

impl FranckCondonState {
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c * c).collect()
    }
}

/// Place the nuclear part of the global ground state (its |0⟩ component) on
/// surface |1⟩ and project onto every retained eigenstate.
///
/// `floor` bounds the captured weight from below; a smaller capture means
/// the energy cutoff does not contain the Franck–Condon envelope.
pub fn franck_condon_state(eigsys: &Eigensystem, floor: f64) -> Result<FranckCondonState> {
    let g = eigsys
        .ground_index()
        .ok_or_else(|| Error::invalid("eigensystem", "no retained states"))?;
    let (basis, ground) = eigsys.block_vector(g);
    let half = basis.el_dim();
    let nuclear = &ground[..half];
    let norm = nuclear.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("eigensystem", "ground state has no |0> component"));
    }

    let gb = eigsys.block_of()[g];
    let off = eigsys.block_offsets()[gb] + half;
    let c = eigsys.coefficients();
    let mut amplitudes = vec![0.0; eigsys.len()];
    for (k, amp) in amplitudes.iter_mut().enumerate() {
        if eigsys.block_of()[k] != gb {
            continue;
        }
        let mut s = 0.0;
        for (i, x) in nuclear.iter().enumerate() {
            s += c[(off + i, k)] * x;
        }
        *amp = s / norm;
    }
    let captured_weight: f64 = amplitudes.iter().map(|a| a * a).sum();
    if !(captured_weight >= floor) {
        return Err(Error::FranckCondonTruncated {
            captured: captured_weight,
            floor,
        });
    }
    let scale = captured_weight.sqrt().recip();
    amplitudes.iter_mut().for_each(|a| *a *= scale);
    let brightest_index = amplitudes
        .iter()
        .enumerate()
        .fold(
            (0, -1.0),
            |(bi, bw), (i, a)| if a * a > bw { (i, a * a) } else { (bi, bw) },
        )
        .0;
    Ok(FranckCondonState {
        amplitudes,
        brightest_index,
        captured_weight,
    })
}

// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Matrix of the 2S2M system Hamiltonian
//!
//! H = Σ_n [T + E_n + (−1)ⁿ (V_n/2)(1 − cos φ) + ωx²/2 + κ x δ_{n1}] |n⟩⟨n|
//!     + λ x (|0⟩⟨1| + |1⟩⟨0|),
//!
//! with T = −(m⁻¹/2) ∂²/∂φ² − (ω/2) ∂²/∂x².

use faer::Mat;

use super::basis::{ho_position, ProductBasis, MAX_BLOCK_DIM};
use super::params::ModelParameters;
use crate::{Error, Result};

/// Real symmetric Hamiltonian matrix of one basis block.
pub fn build_hamiltonian(params: &ModelParameters, basis: &ProductBasis) -> Result<Mat<f64>> {
    params.validate_assembly()?;
    let dim = basis.dim();
    if dim == 0 || dim > MAX_BLOCK_DIM {
        return Err(Error::Dimension(format!(
            "block dimension {dim} outside 1..={MAX_BLOCK_DIM}"
        )));
    }
    let mut h = Mat::<f64>::zeros(dim, dim);
    let mut set = |i: usize, j: usize, v: f64| {
        h[(i, j)] += v;
        if i != j {
            h[(j, i)] += v;
        }
    };

    let n_rot = basis.n_rotor();
    let n_ho = basis.n_ho;
    let origins = [params.e0, params.e1];
    // (−1)ⁿ V_n / 2
    let twist = [params.v0 / 2.0, -params.v1 / 2.0];
    let cos = basis.rotor.cos_couplings();

    for el in 0..2 {
        for r in 0..n_rot {
            let m = basis.rotor.momentum(r) as f64;
            let rotor_kinetic = 0.5 * params.m_inv * m * m;
            for v in 0..n_ho {
                let i = basis.index(el, r, v);
                let ho = params.omega * (v as f64 + 0.5);
                set(i, i, rotor_kinetic + origins[el] + twist[el] + ho);
                if v + 1 < n_ho {
                    let x = ho_position(v);
                    if el == 1 && params.kappa != 0.0 {
                        set(i, basis.index(1, r, v + 1), params.kappa * x);
                    }
                    if el == 0 && params.lambda_c != 0.0 {
                        set(i, basis.index(1, r, v + 1), params.lambda_c * x);
                        set(basis.index(0, r, v + 1), basis.index(1, r, v), params.lambda_c * x);
                    }
                }
            }
        }
        if twist[el] != 0.0 {
            for &(a, b, c) in &cos {
                for v in 0..n_ho {
                    set(basis.index(el, a, v), basis.index(el, b, v), -twist[el] * c);
                }
            }
        }
    }
    Ok(h)
}

// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use faer::Mat;

use super::BathChannel;
use crate::model::basis::{ho_position, ProductBasis};
use crate::model::Eigensystem;

/// Eigenbasis matrix ⟨i|O|j⟩ of a block-diagonal operator `O`, given by its
/// action on one block vector (`op(basis, input, output)`, output zeroed).
pub fn eigenbasis_operator<F>(es: &Eigensystem, op: F) -> Mat<f64>
where
    F: Fn(&ProductBasis, &[f64], &mut [f64]),
{
    let n = es.len();
    let c = es.coefficients();
    let mut applied = Mat::<f64>::zeros(c.nrows(), n);
    let mut input = Vec::new();
    let mut output = Vec::new();
    for k in 0..n {
        let b = es.block_of()[k];
        let basis = es.blocks()[b];
        let off = es.block_offsets()[b];
        input.clear();
        input.extend((0..basis.dim()).map(|i| c[(off + i, k)]));
        output.clear();
        output.resize(basis.dim(), 0.0);
        op(&basis, &input, &mut output);
        for (i, v) in output.iter().enumerate() {
            applied[(off + i, k)] = *v;
        }
    }
    let mut s = c.transpose() * &applied;
    // exact symmetry for Hermitian operators
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// S_ij = ⟨i|Ŝ|j⟩ for one bath channel.
pub fn coupling_matrix(es: &Eigensystem, channel: BathChannel) -> Mat<f64> {
    match channel {
        BathChannel::TuningX => eigenbasis_operator(es, |b, c, out| {
            for r in 0..b.n_rotor() {
                for v in 0..b.n_ho - 1 {
                    let x = ho_position(v);
                    let (lo, hi) = (b.index(1, r, v), b.index(1, r, v + 1));
                    out[lo] += x * c[hi];
                    out[hi] += x * c[lo];
                }
            }
        }),
        BathChannel::TorsionPhi => eigenbasis_operator(es, |b, c, out| {
            let half = b.el_dim();
            out[half..].copy_from_slice(&c[half..]);
            for (a, bb, w) in b.rotor.cos_couplings() {
                for v in 0..b.n_ho {
                    let (i, j) = (b.index(1, a, v), b.index(1, bb, v));
                    out[i] -= w * c[j];
                    out[j] -= w * c[i];
                }
            }
        }),
    }
}

/// Coupling matrices for every listed channel, in order.
pub fn coupling_matrices(es: &Eigensystem, channels: &[BathChannel]) -> Vec<Mat<f64>> {
    channels.iter().map(|&ch| coupling_matrix(es, ch)).collect()
}

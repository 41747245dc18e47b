// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use faer::Mat;

use super::DensityMatrix;
use crate::bath::eigenbasis_operator;
use crate::model::Eigensystem;

/// Eigenbasis matrices of |n⟩⟨n| ⊗ Θ_region for n ∈ {0, 1} and the cis
/// (φ ∈ [−π/2, π/2)) and trans (φ ∈ [π/2, 3π/2)) regions.
#[derive(Debug, Clone)]
pub struct TransProjectors {
    pub cis_0: Mat<f64>,
    pub cis_1: Mat<f64>,
    pub trans_0: Mat<f64>,
    pub trans_1: Mat<f64>,
}

/// Populations of the four diabatic/conformer regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionPopulations {
    pub cis_0: f64,
    pub cis_1: f64,
    pub trans_0: f64,
    pub trans_1: f64,
}

impl RegionPopulations {
    /// Quantum yield: trans population on diabatic |1⟩.
    pub fn qy(&self) -> f64 {
        self.trans_1
    }

    pub fn total(&self) -> f64 {
        self.cis_0 + self.cis_1 + self.trans_0 + self.trans_1
    }
}

impl TransProjectors {
    pub fn build(es: &Eigensystem) -> Self {
        let region = |el: usize, trans: bool| {
            eigenbasis_operator(es, move |b, c, out| {
                let theta = b.rotor.trans_indicator();
                let nr = b.n_rotor();
                for r in 0..nr {
                    for v in 0..b.n_ho {
                        let mut s = 0.0;
                        for rp in 0..nr {
                            s += theta[(r, rp)] * c[b.index(el, rp, v)];
                        }
                        let i = b.index(el, r, v);
                        out[i] = if trans { s } else { c[i] - s };
                    }
                }
            })
        };
        Self {
            cis_0: region(0, false),
            cis_1: region(1, false),
            trans_0: region(0, true),
            trans_1: region(1, true),
        }
    }

    pub fn measure(&self, rho: &DensityMatrix) -> RegionPopulations {
        RegionPopulations {
            cis_0: rho.expectation(self.cis_0.as_ref()),
            cis_1: rho.expectation(self.cis_1.as_ref()),
            trans_0: rho.expectation(self.trans_0.as_ref()),
            trans_1: rho.expectation(self.trans_1.as_ref()),
        }
    }

    /// Diagonal-only evaluation for population vectors.
    pub fn measure_populations(&self, p: &[f64]) -> RegionPopulations {
        let diag = |m: &Mat<f64>| p.iter().enumerate().map(|(i, x)| m[(i, i)] * x).sum::<f64>();
        RegionPopulations {
            cis_0: diag(&self.cis_0),
            cis_1: diag(&self.cis_1),
            trans_0: diag(&self.trans_0),
            trans_1: diag(&self.trans_1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::basis::{BasisSpec, ParitySectors};
    use crate::model::ModelParameters;

    fn es() -> Eigensystem {
        let spec = BasisSpec {
            n_rotor_max: 16,
            n_ho: 10,
            energy_cutoff: 2.4,
            parity_split: true,
            sectors: ParitySectors::Both,
        };
        Eigensystem::solve(&ModelParameters::default(), &spec).unwrap()
    }

    #[test]
    fn projectors_sum_to_identity() {
        let es = es();
        let p = TransProjectors::build(&es);
        for i in 0..es.len() {
            for j in 0..es.len() {
                let s = p.cis_0[(i, j)] + p.cis_1[(i, j)] + p.trans_0[(i, j)] + p.trans_1[(i, j)];
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ground_state_is_cis_on_lower_surface() {
        let es = es();
        let p = TransProjectors::build(&es);
        let mut c = vec![0.0; es.len()];
        c[0] = 1.0;
        let pops = p.measure(&DensityMatrix::pure(&c));
        assert!(pops.cis_0 > 0.95, "{pops:?}");
        assert!(pops.qy() < 1e-3);
        assert!((pops.total() - 1.0).abs() < 1e-12);
        assert_eq!(pops, p.measure_populations(&c));
    }

    #[test]
    fn trans_weight_tracks_transness_sign() {
        // states with high trans-ness carry most of their weight in the trans region
        let es = es();
        let p = TransProjectors::build(&es);
        for k in 0..es.len() {
            let w = p.trans_0[(k, k)] + p.trans_1[(k, k)];
            if es.transness()[k] > 0.9 {
                assert!(w > 0.5);
            }
            if es.transness()[k] < 0.05 {
                assert!(w < 0.5);
            }
        }
    }
}

// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Primitive product basis |n⟩_el ⊗ |rotor⟩ ⊗ |v⟩_HO.
//!
//! The torsion φ is expanded either in plane waves e^{imφ}/√(2π),
//! m ∈ [−M, M], or, when the φ → −φ symmetry is exploited, in the real
//! combinations 1/√(2π), cos(mφ)/√π (even) and sin(mφ)/√π (odd). The tuning
//! mode uses dimensionless harmonic-oscillator functions.

use std::f64::consts::PI;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest primitive dimension accepted for a single dense block.
pub const MAX_BLOCK_DIM: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i8 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Option<Self> {
        match sign {
            1 => Some(Parity::Even),
            -1 => Some(Parity::Odd),
            _ => None,
        }
    }
}

/// Which φ-parity sectors to solve when the basis is parity-split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParitySectors {
    #[default]
    Both,
    Even,
    Odd,
}

impl ParitySectors {
    pub fn contains(self, p: Parity) -> bool {
        matches!(
            (self, p),
            (ParitySectors::Both, _) | (ParitySectors::Even, Parity::Even) | (ParitySectors::Odd, Parity::Odd)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasisSpec {
    /// Plane-wave cutoff M; rotor indices run over m ∈ [−M, M].
    pub n_rotor_max: usize,
    /// Number of harmonic-oscillator levels for x.
    pub n_ho: usize,
    /// Eigenstates with ε > energy_cutoff (eV) are discarded.
    pub energy_cutoff: f64,
    /// Solve even and odd φ-parity blocks separately.
    pub parity_split: bool,
    #[serde(default)]
    pub sectors: ParitySectors,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            n_rotor_max: 48,
            n_ho: 32,
            energy_cutoff: 3.0,
            parity_split: true,
            sectors: ParitySectors::Both,
        }
    }
}

impl BasisSpec {
    /// Total primitive dimension 2·(2M+1)·n_ho, independent of the parity split.
    pub fn primitive_dim(&self) -> usize {
        2 * (2 * self.n_rotor_max + 1) * self.n_ho
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rotor_max == 0 {
            return Err(Error::invalid("n_rotor_max", "must be >= 1"));
        }
        if self.n_ho < 2 {
            return Err(Error::invalid("n_ho", "must be >= 2"));
        }
        if !(self.energy_cutoff > 0.0 && self.energy_cutoff.is_finite()) {
            return Err(Error::invalid("energy_cutoff", "must be finite and > 0"));
        }
        if !self.parity_split && self.sectors != ParitySectors::Both {
            return Err(Error::invalid(
                "sectors",
                "sector selection requires parity_split = true",
            ));
        }
        for block in self.blocks() {
            if block.dim() > MAX_BLOCK_DIM {
                return Err(Error::Dimension(format!(
                    "block dimension {} exceeds limit {MAX_BLOCK_DIM}",
                    block.dim()
                )));
            }
        }
        Ok(())
    }

    /// The diagonalization blocks implied by the spec.
    pub fn blocks(&self) -> Vec<ProductBasis> {
        let m = self.n_rotor_max;
        if self.parity_split {
            [Parity::Even, Parity::Odd]
                .into_iter()
                .filter(|&p| self.sectors.contains(p))
                .map(|p| {
                    let rotor = match p {
                        Parity::Even => RotorBasis::Cosine { n_max: m },
                        Parity::Odd => RotorBasis::Sine { n_max: m },
                    };
                    ProductBasis::new(rotor, self.n_ho)
                })
                .collect()
        } else {
            vec![ProductBasis::new(RotorBasis::PlaneWave { n_max: m }, self.n_ho)]
        }
    }

    /// Same cutoffs scaled by `factor` (rounded up), for convergence checks.
    pub fn enlarged(&self, factor: f64) -> Self {
        Self {
            n_rotor_max: (self.n_rotor_max as f64 * factor).ceil() as usize,
            n_ho: (self.n_ho as f64 * factor).ceil() as usize,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotorBasis {
    /// e^{imφ}/√(2π) for m = −n_max..=n_max.
    PlaneWave { n_max: usize },
    /// 1/√(2π), cos(mφ)/√π for m = 1..=n_max.
    Cosine { n_max: usize },
    /// sin(mφ)/√π for m = 1..=n_max.
    Sine { n_max: usize },
}

impl RotorBasis {
    pub fn len(&self) -> usize {
        match *self {
            RotorBasis::PlaneWave { n_max } => 2 * n_max + 1,
            RotorBasis::Cosine { n_max } => n_max + 1,
            RotorBasis::Sine { n_max } => n_max,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_max(&self) -> usize {
        match *self {
            RotorBasis::PlaneWave { n_max } | RotorBasis::Cosine { n_max } | RotorBasis::Sine { n_max } => n_max,
        }
    }

    pub fn parity(&self) -> Option<Parity> {
        match self {
            RotorBasis::PlaneWave { .. } => None,
            RotorBasis::Cosine { .. } => Some(Parity::Even),
            RotorBasis::Sine { .. } => Some(Parity::Odd),
        }
    }

    /// Angular momentum carried by basis function `idx` (signed for plane waves).
    pub fn momentum(&self, idx: usize) -> i64 {
        match *self {
            RotorBasis::PlaneWave { n_max } => idx as i64 - n_max as i64,
            RotorBasis::Cosine { .. } => idx as i64,
            RotorBasis::Sine { .. } => idx as i64 + 1,
        }
    }

    /// Nonzero entries ⟨a|cos φ|b⟩ with a < b. The operator is tridiagonal
    /// in every representation and has a vanishing diagonal.
    pub fn cos_couplings(&self) -> Vec<(usize, usize, f64)> {
        let n = self.len();
        (0..n.saturating_sub(1))
            .map(|a| {
                let v = match self {
                    RotorBasis::Cosine { .. } if a == 0 => std::f64::consts::FRAC_1_SQRT_2,
                    _ => 0.5,
                };
                (a, a + 1, v)
            })
            .collect()
    }

    /// Dense matrix of cos φ.
    pub fn cos_matrix(&self) -> Mat<f64> {
        let n = self.len();
        let mut m = Mat::zeros(n, n);
        for (a, b, v) in self.cos_couplings() {
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
        m
    }

    /// Matrix of the trans-region indicator Θ(φ ∈ [π/2, 3π/2)), from exact
    /// integrals of products of basis functions over the half circle.
    pub fn trans_indicator(&self) -> Mat<f64> {
        let n = self.len();
        match *self {
            RotorBasis::PlaneWave { .. } => Mat::from_fn(n, n, |a, b| half_circle_cos(b as i64 - a as i64)),
            RotorBasis::Cosine { .. } => Mat::from_fn(n, n, |a, b| {
                let (ma, mb) = (a as i64, b as i64);
                let mut v = half_circle_cos(ma - mb) + half_circle_cos(ma + mb);
                if a == 0 {
                    v *= std::f64::consts::FRAC_1_SQRT_2;
                }
                if b == 0 {
                    v *= std::f64::consts::FRAC_1_SQRT_2;
                }
                v
            }),
            RotorBasis::Sine { .. } => Mat::from_fn(n, n, |a, b| {
                let (ma, mb) = (a as i64 + 1, b as i64 + 1);
                half_circle_cos(ma - mb) - half_circle_cos(ma + mb)
            }),
        }
    }

    /// Index of the plane wave with momentum −m, for the φ → −φ map.
    pub fn mirror_index(&self, idx: usize) -> Option<usize> {
        match *self {
            RotorBasis::PlaneWave { n_max } => Some(2 * n_max - idx),
            _ => None,
        }
    }

    /// Whether `idx` sits at the momentum cutoff.
    pub fn is_edge(&self, idx: usize) -> bool {
        self.momentum(idx).unsigned_abs() as usize == self.n_max()
    }
}

/// (1/2π) ∫_{π/2}^{3π/2} cos(dφ) dφ. The matching sine integral vanishes
/// because the interval is symmetric about π.
fn half_circle_cos(d: i64) -> f64 {
    if d == 0 {
        return 0.5;
    }
    let d = d as f64;
    ((1.5 * d * PI).sin() - (0.5 * d * PI).sin()) / (2.0 * PI * d)
}

/// ⟨v|x|v+1⟩ for the dimensionless oscillator, √((v+1)/2).
pub fn ho_position(v: usize) -> f64 {
    ((v + 1) as f64 / 2.0).sqrt()
}

/// One diagonalization block: both electronic states, one rotor set and the
/// oscillator ladder. Index layout is `(el · n_rotor + r) · n_ho + v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductBasis {
    pub rotor: RotorBasis,
    pub n_ho: usize,
}

impl ProductBasis {
    pub fn new(rotor: RotorBasis, n_ho: usize) -> Self {
        Self { rotor, n_ho }
    }

    pub fn n_rotor(&self) -> usize {
        self.rotor.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n_rotor() * self.n_ho
    }

    /// Dimension of one electronic block.
    pub fn el_dim(&self) -> usize {
        self.n_rotor() * self.n_ho
    }

    #[inline]
    pub fn index(&self, el: usize, r: usize, v: usize) -> usize {
        (el * self.n_rotor() + r) * self.n_ho + v
    }

    pub fn parity(&self) -> Option<Parity> {
        self.rotor.parity()
    }
}

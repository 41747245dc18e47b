// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Redfield generator in the eigenbasis without the rank-4 tensor.
//!
//! For each bath with system operator S (real symmetric in the eigenbasis)
//! let Λ_ij = S_ij γ(ε_j − ε_i). With M = Σ_b S_b Λ_b the dissipative part is
//!
//! ```text
//! D(ρ) = W + W†,    W = Σ_b Λ_b ρ S_b − M ρ
//! ```
//!
//! which is the usual −[S, Λρ − ρΛ†] form with principal-value (Lamb shift)
//! terms dropped. It costs one product with M plus two per bath, each on the
//! stacked `[Re ρ | Im ρ]`.

use faer::linalg::matmul::triangular::{self, BlockStructure};
use faer::{Accum, Mat, MatRef, Par};

use super::coupling::coupling_matrix;
use super::BathSpec;
use crate::dynamics::DensityMatrix;
use crate::linalg::gemm;
use crate::model::Eigensystem;
use crate::{Error, Result};

/// Levels closer than this (eV) keep their mutual coherences in secular mode.
pub const DEFAULT_DEGENERACY_WINDOW: f64 = 1e-6;

/// Tolerance on |ρ − ρ†| accepted by [`DissipatorSet::redfield_apply`].
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DissipatorSet {
    energies: Vec<f64>,
    baths: Vec<BathSpec>,
    s: Vec<Mat<f64>>,
    lambda: Vec<Mat<f64>>,
    m_total: Mat<f64>,
    /// every Λ vanishes on and below the diagonal (all baths at 0 K)
    upper_triangular: bool,
    k: Mat<f64>,
}

/// Reusable buffers for [`DissipatorSet::apply_dissipator`].
#[derive(Debug, Clone)]
pub struct RedfieldWorkspace {
    x: Mat<f64>,
    w: Mat<f64>,
}

impl RedfieldWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            x: Mat::zeros(n, 2 * n),
            w: Mat::zeros(n, 2 * n),
        }
    }
}

impl DissipatorSet {
    pub fn build(es: &Eigensystem, baths: &[BathSpec]) -> Result<Self> {
        let s: Vec<Mat<f64>> = baths
            .iter()
            .map(|b| {
                b.validate()?;
                Ok(coupling_matrix(es, b.channel))
            })
            .collect::<Result<_>>()?;
        Self::from_couplings(es.energies().to_vec(), baths.to_vec(), s)
    }

    /// Assemble from explicit eigenbasis coupling matrices.
    pub fn from_couplings(energies: Vec<f64>, baths: Vec<BathSpec>, s: Vec<Mat<f64>>) -> Result<Self> {
        let n = energies.len();
        if s.len() != baths.len() {
            return Err(Error::Dimension(format!(
                "{} baths but {} coupling matrices",
                baths.len(),
                s.len()
            )));
        }
        for m in &s {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "coupling matrix is {}x{}, eigensystem has {n} states",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("energies", "must be sorted ascending"));
        }
        let lambda: Vec<Mat<f64>> = baths
            .iter()
            .zip(&s)
            .map(|(b, s)| Mat::from_fn(n, n, |i, j| s[(i, j)] * b.rate_kernel(energies[j] - energies[i])))
            .collect();
        let mut m_total = Mat::<f64>::zeros(n, n);
        for (sb, lb) in s.iter().zip(&lambda) {
            gemm(m_total.as_mut(), true, sb.as_ref(), lb.as_ref(), 1.0);
        }
        let upper_triangular = lambda.iter().all(|l| (0..n).all(|j| (j..n).all(|i| l[(i, j)] == 0.0)));

        let mut k = Mat::<f64>::zeros(n, n);
        for (b, sb) in baths.iter().zip(&s) {
            for j in 0..n {
                for i in 0..n {
                    if i != j {
                        k[(i, j)] += 2.0 * sb[(i, j)] * sb[(i, j)] * b.rate_kernel(energies[j] - energies[i]);
                    }
                }
            }
        }
        for j in 0..n {
            let out: f64 = (0..n).filter(|&i| i != j).map(|i| k[(i, j)]).sum();
            k[(j, j)] = -out;
        }
        Ok(Self {
            energies,
            baths,
            s,
            lambda,
            m_total,
            upper_triangular,
            k,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn baths(&self) -> &[BathSpec] {
        &self.baths
    }

    pub fn coupling(&self, bath: usize) -> MatRef<'_, f64> {
        self.s[bath].as_ref()
    }

    pub fn lambda(&self, bath: usize) -> MatRef<'_, f64> {
        self.lambda[bath].as_ref()
    }

    /// Secular population rate matrix: K_ij is the rate j → i for i ≠ j and
    /// K_jj = −Σ_{i≠j} K_ij.
    pub fn rate_matrix(&self) -> MatRef<'_, f64> {
        self.k.as_ref()
    }

    /// Secular decay rate of coherence ρ_ab:
    /// ½(out_a + out_b) + Σ_b γ_b(0)(S_aa − S_bb)².
    pub fn dephasing_rate(&self, a: usize, b: usize) -> f64 {
        let mut g = self.m_total[(a, a)] + self.m_total[(b, b)];
        for (s, l) in self.s.iter().zip(&self.lambda) {
            g -= l[(a, a)] * s[(b, b)] + s[(a, a)] * l[(b, b)];
        }
        g
    }

    /// dρ/dt = −i[diag(ε), ρ] + D(ρ). Rejects non-Hermitian input.
    pub fn redfield_apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.len() {
            return Err(Error::Dimension(format!(
                "density matrix is {0}x{0}, dissipator has {1} states",
                rho.dim(),
                self.len()
            )));
        }
        let dev = rho.hermiticity_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NonHermitian { deviation: dev });
        }
        let mut out = DensityMatrix::zeros(self.len());
        let mut ws = RedfieldWorkspace::new(self.len());
        self.apply_dissipator(rho, &mut out, &mut ws);
        self.add_coherent(rho, &mut out);
        Ok(out)
    }

    /// out += −i[diag(ε), ρ].
    pub fn add_coherent(&self, rho: &DensityMatrix, out: &mut DensityMatrix) {
        let n = self.len();
        let (re, im) = (rho.re(), rho.im());
        let mut o = out.stacked_mut();
        for j in 0..n {
            for i in 0..n {
                let w = self.energies[i] - self.energies[j];
                o[(i, j)] += w * im[(i, j)];
                o[(i, n + j)] -= w * re[(i, j)];
            }
        }
    }

    /// out = D(ρ), Hermitian to the last bit.
    pub fn apply_dissipator(&self, rho: &DensityMatrix, out: &mut DensityMatrix, ws: &mut RedfieldWorkspace) {
        let n = self.len();
        let r = rho.stacked();
        gemm(ws.w.as_mut(), false, self.m_total.as_ref(), r, -1.0);
        for (s, l) in self.s.iter().zip(&self.lambda) {
            if self.upper_triangular {
                triangular::matmul(
                    ws.x.as_mut(),
                    BlockStructure::Rectangular,
                    Accum::Replace,
                    l.as_ref(),
                    BlockStructure::StrictTriangularUpper,
                    r,
                    BlockStructure::Rectangular,
                    1.0,
                    Par::Seq,
                );
            } else {
                gemm(ws.x.as_mut(), false, l.as_ref(), r, 1.0);
            }
            for half in 0..2 {
                gemm(
                    ws.w.as_mut().subcols_mut(half * n, n),
                    true,
                    ws.x.as_ref().subcols(half * n, n),
                    s.as_ref(),
                    1.0,
                );
            }
        }
        let w = &ws.w;
        let mut o = out.stacked_mut();
        for j in 0..n {
            for i in 0..n {
                o[(i, j)] = w[(i, j)] + w[(j, i)];
                o[(i, n + j)] = w[(i, n + j)] - w[(j, n + i)];
            }
        }
    }

    /// Population-only generator plus, for levels within `window` eV of each
    /// other, the real and imaginary parts of their mutual coherences.
    pub fn secular_generator(&self, window: f64) -> SecularGenerator {
        let n = self.len();
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if self.energies[b] - self.energies[a] >= window {
                    break;
                }
                pairs.push((a, b));
            }
        }
        let dim = n + 2 * pairs.len();
        let mut g = Mat::<f64>::zeros(dim, dim);
        g.as_mut().submatrix_mut(0, 0, n, n).copy_from(&self.k);
        for (q, &(c, d)) in pairs.iter().enumerate() {
            let (xq, yq) = (n + 2 * q, n + 2 * q + 1);
            for a in 0..n {
                g[(a, xq)] = self.tensor(a, a, c, d) + self.tensor(a, a, d, c);
            }
            for (p, &(a, b)) in pairs.iter().enumerate() {
                let (xp, yp) = (n + 2 * p, n + 2 * p + 1);
                let fwd = self.tensor(a, b, c, d);
                let rev = self.tensor(a, b, d, c);
                g[(xp, xq)] = fwd + rev;
                g[(yp, yq)] = fwd - rev;
            }
        }
        for (p, &(a, b)) in pairs.iter().enumerate() {
            let (xp, yp) = (n + 2 * p, n + 2 * p + 1);
            for c in 0..n {
                g[(xp, c)] = self.tensor(a, b, c, c);
            }
            let w = self.energies[a] - self.energies[b];
            g[(xp, yp)] += w;
            g[(yp, xp)] -= w;
        }
        SecularGenerator {
            n_states: n,
            pairs,
            matrix: g,
        }
    }

    /// R_{ab,cd}: coefficient of ρ_cd in dρ_ab/dt from the dissipator.
    pub fn tensor(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let mut r = 0.0;
        for (s, l) in self.s.iter().zip(&self.lambda) {
            r += l[(a, c)] * s[(d, b)] + s[(a, c)] * l[(b, d)];
        }
        if d == b {
            r -= self.m_total[(a, c)];
        }
        if a == c {
            r -= self.m_total[(b, d)];
        }
        r
    }
}

/// Real linear generator of the secular dynamics. Variables are the `n_states`
/// populations followed by (Re ρ_ab, Im ρ_ab) for each quasi-degenerate pair.
#[derive(Debug, Clone)]
pub struct SecularGenerator {
    pub n_states: usize,
    pub pairs: Vec<(usize, usize)>,
    pub matrix: Mat<f64>,
}

impl SecularGenerator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Secular variables extracted from a full density matrix.
    pub fn project(&self, rho: &DensityMatrix) -> Vec<f64> {
        let mut v = rho.populations();
        for &(a, b) in &self.pairs {
            v.push(rho.re()[(a, b)]);
            v.push(rho.im()[(a, b)]);
        }
        v
    }

    /// Density matrix holding the secular variables (other coherences zero).
    pub fn lift(&self, v: &[f64]) -> DensityMatrix {
        let n = self.n_states;
        let mut rho = DensityMatrix::diagonal(&v[..n]);
        for (q, &(a, b)) in self.pairs.iter().enumerate() {
            let (x, y) = (v[n + 2 * q], v[n + 2 * q + 1]);
            let mut s = rho.stacked_mut();
            s[(a, b)] = x;
            s[(b, a)] = x;
            s[(a, n + b)] = y;
            s[(b, n + a)] = -y;
        }
        rho
    }
}

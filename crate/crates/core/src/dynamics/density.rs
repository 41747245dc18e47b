// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use faer::{Mat, MatMut, MatRef};

/// Hermitian density matrix in the eigenbasis, stored as one `N × 2N` real
/// matrix `[Re ρ | Im ρ]` so products with real operators act on both halves
/// in a single call.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: Mat<f64>,
}

impl DensityMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            data: Mat::zeros(n, 2 * n),
        }
    }

    /// |c⟩⟨c| for real amplitudes.
    pub fn pure(c: &[f64]) -> Self {
        let n = c.len();
        let mut rho = Self::zeros(n);
        for j in 0..n {
            for i in 0..n {
                rho.data[(i, j)] = c[i] * c[j];
            }
        }
        rho
    }

    pub fn diagonal(p: &[f64]) -> Self {
        let mut rho = Self::zeros(p.len());
        for (i, &v) in p.iter().enumerate() {
            rho.data[(i, i)] = v;
        }
        rho
    }

    pub fn from_parts(re: MatRef<'_, f64>, im: MatRef<'_, f64>) -> Self {
        let n = re.nrows();
        let mut rho = Self::zeros(n);
        rho.re_mut().copy_from(re);
        rho.im_mut().copy_from(im);
        rho
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn re(&self) -> MatRef<'_, f64> {
        self.data.as_ref().subcols(0, self.dim())
    }

    pub fn im(&self) -> MatRef<'_, f64> {
        let n = self.dim();
        self.data.as_ref().subcols(n, n)
    }

    pub fn re_mut(&mut self) -> MatMut<'_, f64> {
        let n = self.dim();
        self.data.as_mut().subcols_mut(0, n)
    }

    pub fn im_mut(&mut self) -> MatMut<'_, f64> {
        let n = self.dim();
        self.data.as_mut().subcols_mut(n, n)
    }

    pub fn stacked(&self) -> MatRef<'_, f64> {
        self.data.as_ref()
    }

    pub fn stacked_mut(&mut self) -> MatMut<'_, f64> {
        self.data.as_mut()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.data[(i, i)]).collect()
    }

    /// max |ρ − ρ†|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let (re, im) = (self.re(), self.im());
        let mut dev = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                dev = dev.max((re[(i, j)] - re[(j, i)]).abs());
                dev = dev.max((im[(i, j)] + im[(j, i)]).abs());
            }
        }
        dev
    }

    /// Replace ρ by (ρ + ρ†)/2, making it Hermitian to the last bit.
    pub fn symmetrize(&mut self) {
        let n = self.dim();
        for j in 0..n {
            for i in 0..j {
                let r = 0.5 * (self.data[(i, j)] + self.data[(j, i)]);
                self.data[(i, j)] = r;
                self.data[(j, i)] = r;
                let m = 0.5 * (self.data[(i, n + j)] - self.data[(j, n + i)]);
                self.data[(i, n + j)] = m;
                self.data[(j, n + i)] = -m;
            }
            self.data[(j, n + j)] = 0.0;
        }
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                s += self.re()[(i, j)].powi(2) + self.im()[(i, j)].powi(2);
            }
        }
        s
    }

    /// Tr(Pρ) for a real symmetric observable P.
    pub fn expectation(&self, p: MatRef<'_, f64>) -> f64 {
        let re = self.re();
        let mut s = 0.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                s += p[(i, j)] * re[(i, j)];
            }
        }
        s
    }

    /// Largest off-diagonal |ρ_ij|.
    pub fn max_coherence(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                if i != j {
                    m = m.max(self.re()[(i, j)].hypot(self.im()[(i, j)]));
                }
            }
        }
        m
    }

    /// Cheap positivity monitor: the most negative of `ρ_ii` and
    /// `ρ_ii ρ_jj − |ρ_ij|²` over all 2×2 principal minors.
    pub fn positivity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            let pj = self.data[(j, j)];
            worst = worst.min(pj);
            for i in 0..j {
                let pi = self.data[(i, i)];
                let c2 = self.data[(i, j)].powi(2) + self.data[(i, n + j)].powi(2);
                worst = worst.min(pi * pj - c2);
            }
        }
        worst
    }

    pub(crate) fn axpy(&mut self, alpha: f64, x: &DensityMatrix) {
        for j in 0..self.data.ncols() {
            for i in 0..self.data.nrows() {
                self.data[(i, j)] += alpha * x.data[(i, j)];
            }
        }
    }
}

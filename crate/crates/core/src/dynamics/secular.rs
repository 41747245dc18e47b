// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exact-in-time evolution under the secular generator.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};

use crate::bath::SecularGenerator;
use crate::linalg::expm;
use crate::{Error, Result};

/// Acceptance thresholds for the spectral route.
const RESIDUAL_TOL: f64 = 1e-10;
const AMPLIFICATION_TOL: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecularMethod {
    /// v(t) = V e^{Λt} V⁻¹ v₀.
    Spectral,
    /// Padé exponentials between consecutive output times.
    Exponential,
}

/// Propagates secular variables from a fixed initial vector.
pub struct SecularPropagator {
    generator: Mat<f64>,
    v0: Vec<f64>,
    spectral: Option<Spectral>,
    /// last (time, state) handed out by the exponential route
    cursor: (f64, Vec<f64>),
}

struct Spectral {
    vectors: Mat<c64>,
    values: Vec<c64>,
    coeffs: Vec<c64>,
}

impl SecularPropagator {
    pub fn new(gen: &SecularGenerator, v0: &[f64]) -> Result<Self> {
        if v0.len() != gen.dim() {
            return Err(Error::Dimension(format!(
                "initial vector has {} entries, generator {}",
                v0.len(),
                gen.dim()
            )));
        }
        let spectral = Spectral::try_new(&gen.matrix, v0);
        if spectral.is_none() {
            log::info!("secular generator is ill-conditioned for eigendecomposition; using matrix exponentials");
        }
        Ok(Self {
            generator: gen.matrix.clone(),
            v0: v0.to_vec(),
            spectral,
            cursor: (0.0, v0.to_vec()),
        })
    }

    /// Force the exponential route (for cross-checks).
    pub fn exponential_only(gen: &SecularGenerator, v0: &[f64]) -> Result<Self> {
        let mut p = Self::new(gen, v0)?;
        p.spectral = None;
        Ok(p)
    }

    pub fn method(&self) -> SecularMethod {
        if self.spectral.is_some() {
            SecularMethod::Spectral
        } else {
            SecularMethod::Exponential
        }
    }

    /// State at time `t` (ħ/eV) after the start. With the exponential route,
    /// calls must come in nondecreasing time order.
    pub fn at(&mut self, t: f64) -> Result<Vec<f64>> {
        if let Some(s) = &self.spectral {
            return Ok(s.evaluate(t));
        }
        let (t_prev, v_prev) = &self.cursor;
        if t < *t_prev {
            if t == 0.0 {
                return Ok(self.v0.clone());
            }
            return Err(Error::invalid("time", "exponential route needs nondecreasing times"));
        }
        if t == *t_prev {
            return Ok(v_prev.clone());
        }
        let dt = t - t_prev;
        let n = self.generator.nrows();
        let scaled = Mat::from_fn(n, n, |i, j| self.generator[(i, j)] * dt);
        let e = expm(scaled.as_ref());
        let v: Vec<f64> = (0..n).map(|i| (0..n).map(|j| e[(i, j)] * v_prev[j]).sum()).collect();
        self.cursor = (t, v.clone());
        Ok(v)
    }
}

impl Spectral {
    fn try_new(g: &Mat<f64>, v0: &[f64]) -> Option<Self> {
        let n = g.nrows();
        if n == 0 {
            return None;
        }
        let evd = g.eigen().ok()?;
        let vectors = evd.U().to_owned();
        let values: Vec<c64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();

        let scale = (0..n)
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .map(|(i, j)| g[(i, j)].abs())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        // residual ‖GV − VΛ‖ / ‖G‖
        let gc = Mat::from_fn(n, n, |i, j| c64::new(g[(i, j)], 0.0));
        let gv = &gc * &vectors;
        for j in 0..n {
            for i in 0..n {
                let r = gv[(i, j)] - vectors[(i, j)] * values[j];
                if !(r.norm() / scale <= RESIDUAL_TOL) {
                    return None;
                }
            }
        }
        let rhs = Mat::from_fn(n, 1, |i, _| c64::new(v0[i], 0.0));
        let sol = vectors.partial_piv_lu().solve(&rhs);
        let coeffs: Vec<c64> = (0..n).map(|i| sol[(i, 0)]).collect();
        // reconstruction and cancellation checks
        let mut amplification = 0.0;
        for j in 0..n {
            let col: f64 = (0..n).map(|i| vectors[(i, j)].norm()).sum();
            amplification += col * coeffs[j].norm();
        }
        let v0_norm: f64 = v0.iter().map(|x| x.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        if !(amplification / v0_norm <= AMPLIFICATION_TOL) {
            return None;
        }
        if values.iter().any(|l| l.re > 1e-12 * scale) {
            return None;
        }
        let s = Self {
            vectors,
            values,
            coeffs,
        };
        let back = s.evaluate(0.0);
        if back.iter().zip(v0).any(|(a, b)| (a - b).abs() > 1e-12 * v0_norm) {
            return None;
        }
        Some(s)
    }

    fn evaluate(&self, t: f64) -> Vec<f64> {
        let n = self.vectors.nrows();
        let w: Vec<c64> = self
            .values
            .iter()
            .zip(&self.coeffs)
            .map(|(l, c)| {
                let e = (l * t).exp();
                e * c
            })
            .collect();
        (0..n)
            .map(|i| (0..n).map(|k| (self.vectors[(i, k)] * w[k]).re).sum())
            .collect()
    }
}

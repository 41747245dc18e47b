// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Full Redfield propagation with an integrating-factor Dormand–Prince 5(4)
//! scheme. The coherent part −i[diag(ε), ρ] is integrated exactly by
//! elementwise phases, so the step size is limited only by the dissipator.

use serde::{Deserialize, Serialize};

use super::DensityMatrix;
use crate::bath::{DissipatorSet, RedfieldWorkspace};
use crate::units::internal_to_ps;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step in ħ/eV.
    pub initial_step: f64,
    /// Hard limit on accepted + rejected steps per run.
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step: 0.05,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::invalid("integrator.rtol", "must be in (0, 1)"));
        }
        if !(self.atol > 0.0) {
            return Err(Error::invalid("integrator.atol", "must be > 0"));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::invalid("integrator.initial_step", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// b − b̂ (fifth minus embedded fourth order)
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Stateful integrator for one trajectory.
pub struct NonsecularIntegrator<'a> {
    diss: &'a DissipatorSet,
    settings: IntegratorSettings,
    ws: RedfieldWorkspace,
    k: Vec<DensityMatrix>,
    stage: DensityMatrix,
    lab: DensityMatrix,
    /// D(ρ) at the current state, valid after the first step
    fsal: bool,
    h: f64,
    pub stats: IntegratorStats,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl<'a> NonsecularIntegrator<'a> {
    pub fn new(diss: &'a DissipatorSet, settings: IntegratorSettings) -> Result<Self> {
        settings.validate()?;
        let n = diss.len();
        Ok(Self {
            diss,
            settings,
            ws: RedfieldWorkspace::new(n),
            k: (0..7).map(|_| DensityMatrix::zeros(n)).collect(),
            stage: DensityMatrix::zeros(n),
            lab: DensityMatrix::zeros(n),
            fsal: false,
            h: settings.initial_step,
            stats: IntegratorStats::default(),
            cos: vec![0.0; n],
            sin: vec![0.0; n],
        })
    }

    /// Advance `rho` from `*t` to `t_target` (ħ/eV), landing exactly on it.
    pub fn advance_to(&mut self, rho: &mut DensityMatrix, t: &mut f64, t_target: f64) -> Result<()> {
        if !self.fsal {
            self.diss.apply_dissipator(rho, &mut self.k[0], &mut self.ws);
            self.stats.evaluations += 1;
            self.fsal = true;
        }
        while *t < t_target {
            let remaining = t_target - *t;
            let clamped = self.h >= remaining;
            let h = if clamped { remaining } else { self.h };
            let h_min = 1e-13 * t.abs().max(1.0);
            if h < h_min && !clamped {
                return Err(Error::StepUnderflow {
                    time_ps: internal_to_ps(*t),
                    step: h,
                });
            }
            if self.stats.accepted + self.stats.rejected >= self.settings.max_steps {
                return Err(Error::StepUnderflow {
                    time_ps: internal_to_ps(*t),
                    step: h,
                });
            }
            let err = self.try_step(rho, h);
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                self.stats.accepted += 1;
                self.accept(rho, h);
                *t = if clamped { t_target } else { *t + h };
                let next = h * factor;
                // a step shortened to hit a checkpoint does not shrink the next one
                self.h = if clamped { self.h.max(next) } else { next };
            } else {
                self.stats.rejected += 1;
                self.h = h * factor.min(1.0);
            }
        }
        Ok(())
    }

    fn set_phases(&mut self, tau: f64) {
        for (i, &e) in self.diss.energies().iter().enumerate() {
            let (s, c) = (e * tau).sin_cos();
            self.cos[i] = c;
            self.sin[i] = s;
        }
    }

    /// m ← Φ(τ)∘m with Φ_ab = e^{−i(ε_a − ε_b)τ}, phases set for +τ;
    /// `inverse` applies Φ(−τ).
    fn rotate(cos: &[f64], sin: &[f64], m: &mut DensityMatrix, inverse: bool) {
        let n = m.dim();
        let mut d = m.stacked_mut();
        let sign = if inverse { -1.0 } else { 1.0 };
        for j in 0..n {
            for i in 0..n {
                // e^{−iε_iτ} e^{+iε_jτ}
                let pc = cos[i] * cos[j] + sin[i] * sin[j];
                let ps = sign * (cos[i] * sin[j] - sin[i] * cos[j]);
                let (re, im) = (d[(i, j)], d[(i, n + j)]);
                d[(i, j)] = re * pc - im * ps;
                d[(i, n + j)] = re * ps + im * pc;
            }
        }
    }

    /// One trial step; stages k[1..=6] are computed, the 5th-order solution
    /// ends up in `self.stage` (interaction frame) and D at it in k[6]
    /// (interaction frame). Returns the scaled error norm.
    fn try_step(&mut self, rho: &DensityMatrix, h: f64) -> f64 {
        for s in 1..7 {
            // stage value in the interaction frame
            self.stage.stacked_mut().copy_from(rho.stacked());
            for (j, &a) in A[s].iter().enumerate().take(s) {
                if a != 0.0 {
                    self.stage.axpy(h * a, &self.k[j]);
                }
            }
            let tau = C[s] * h;
            self.set_phases(tau);
            self.lab.stacked_mut().copy_from(self.stage.stacked());
            Self::rotate(&self.cos, &self.sin, &mut self.lab, false);
            // lab-frame dissipator, then back to the interaction frame
            let out = &mut self.k[s];
            self.diss.apply_dissipator(&self.lab, out, &mut self.ws);
            self.stats.evaluations += 1;
            Self::rotate(&self.cos, &self.sin, out, true);
        }
        // stage now holds y5 = ρ + h Σ b_j k_j (row 6 of A is b)
        let n = rho.dim();
        let (y0, y1) = (rho.stacked(), self.stage.stacked());
        let mut acc = 0.0;
        for j in 0..2 * n {
            for i in 0..n {
                let mut e = 0.0;
                for (s, &w) in E.iter().enumerate() {
                    if w != 0.0 {
                        e += w * self.k[s].stacked()[(i, j)];
                    }
                }
                let scale = self.settings.atol + self.settings.rtol * y0[(i, j)].abs().max(y1[(i, j)].abs());
                acc += (h * e / scale).powi(2);
            }
        }
        (acc / (2 * n * n) as f64).sqrt()
    }

    fn accept(&mut self, rho: &mut DensityMatrix, h: f64) {
        self.set_phases(h);
        rho.stacked_mut().copy_from(self.stage.stacked());
        Self::rotate(&self.cos, &self.sin, rho, false);
        rho.symmetrize();
        // FSAL: D(ρ_{n+1}) = Φ(h)∘k7
        self.k.swap(0, 6);
        Self::rotate(&self.cos, &self.sin, &mut self.k[0], false);
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{default_baths, BathSpec};
    use crate::model::basis::{BasisSpec, ParitySectors};
    use crate::model::{Eigensystem, ModelParameters};
    use faer::Mat;

    fn dissipator(t: f64) -> DissipatorSet {
        let spec = BasisSpec {
            n_rotor_max: 14,
            n_ho: 8,
            energy_cutoff: 2.2,
            parity_split: true,
            sectors: ParitySectors::Even,
        };
        let es = Eigensystem::solve(&ModelParameters::default(), &spec).unwrap();
        let baths: Vec<BathSpec> = default_baths()
            .into_iter()
            .map(|b| BathSpec { temperature: t, ..b })
            .collect();
        DissipatorSet::build(&es, &baths).unwrap()
    }

    /// Reference: classical RK4 on the full lab-frame generator with a tiny step.
    fn rk4_reference(d: &DissipatorSet, rho0: &DensityMatrix, t_end: f64, steps: usize) -> DensityMatrix {
        let h = t_end / steps as f64;
        let f = |r: &DensityMatrix| d.redfield_apply(r).unwrap();
        let mut y = rho0.clone();
        for _ in 0..steps {
            let k1 = f(&y);
            let mut tmp = y.clone();
            tmp.axpy(0.5 * h, &k1);
            let k2 = f(&tmp);
            let mut tmp = y.clone();
            tmp.axpy(0.5 * h, &k2);
            let k3 = f(&tmp);
            let mut tmp = y.clone();
            tmp.axpy(h, &k3);
            let k4 = f(&tmp);
            y.axpy(h / 6.0, &k1);
            y.axpy(h / 3.0, &k2);
            y.axpy(h / 3.0, &k3);
            y.axpy(h / 6.0, &k4);
            y.symmetrize();
        }
        y
    }

    fn superposition(n: usize) -> DensityMatrix {
        let c: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).sqrt().recip()).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        DensityMatrix::pure(&c.iter().map(|x| x / norm).collect::<Vec<_>>())
    }

    #[test]
    fn agrees_with_fine_rk4() {
        let d = dissipator(300.0);
        let rho0 = superposition(d.len());
        let t_end = 20.0;
        let want = rk4_reference(&d, &rho0, t_end, 8000);
        let mut rho = rho0.clone();
        let mut t = 0.0;
        let settings = IntegratorSettings {
            rtol: 1e-10,
            atol: 1e-12,
            ..IntegratorSettings::default()
        };
        let mut integ = NonsecularIntegrator::new(&d, settings).unwrap();
        integ.advance_to(&mut rho, &mut t, t_end).unwrap();
        assert_eq!(t, t_end);
        let mut diff = rho.clone();
        diff.axpy(-1.0, &want);
        let err = crate::linalg::max_abs(diff.stacked());
        assert!(err < 1e-8, "max deviation {err}");
    }

    #[test]
    fn conserves_trace_and_hermiticity() {
        let d = dissipator(0.0);
        let mut rho = superposition(d.len());
        let mut t = 0.0;
        let mut integ = NonsecularIntegrator::new(&d, IntegratorSettings::default()).unwrap();
        for target in [1.0, 10.0, 200.0] {
            integ.advance_to(&mut rho, &mut t, target).unwrap();
            assert!((rho.trace() - 1.0).abs() < 1e-12);
            assert_eq!(rho.hermiticity_deviation(), 0.0);
        }
        assert!(integ.stats.accepted > 0);
    }

    #[test]
    fn coherent_limit_is_exact_phase() {
        // with zero coupling only the phases evolve
        let spec = BasisSpec {
            n_rotor_max: 10,
            n_ho: 6,
            energy_cutoff: 2.0,
            parity_split: true,
            sectors: ParitySectors::Even,
        };
        let es = Eigensystem::solve(&ModelParameters::default(), &spec).unwrap();
        let n = es.len();
        let d = DissipatorSet::from_couplings(es.energies().to_vec(), vec![], vec![]).unwrap();
        let rho0 = superposition(n);
        let mut rho = rho0.clone();
        let mut t = 0.0;
        let mut integ = NonsecularIntegrator::new(&d, IntegratorSettings::default()).unwrap();
        let t_end = 1234.5;
        integ.advance_to(&mut rho, &mut t, t_end).unwrap();
        let e = es.energies();
        let want_re = Mat::from_fn(n, n, |i, j| rho0.re()[(i, j)] * ((e[i] - e[j]) * t_end).cos());
        for i in 0..n {
            for j in 0..n {
                assert!((rho.re()[(i, j)] - want_re[(i, j)]).abs() < 1e-10);
            }
        }
    }
}

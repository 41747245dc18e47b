// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Density-matrix and population propagation from Franck–Condon initial
//! conditions.

mod density;
mod nonsecular;
mod observables;
mod secular;
mod trajectory;

pub use density::DensityMatrix;
pub use nonsecular::{IntegratorSettings, IntegratorStats, NonsecularIntegrator};
pub use observables::{RegionPopulations, TransProjectors};
pub use secular::{SecularMethod, SecularPropagator};
pub use trajectory::{checkpoint_grid, interpolate_log_time, Diagnostics, TrajectoryRecord, TRAJECTORY_VERSION};

use serde::{Deserialize, Serialize};

use crate::bath::{DissipatorSet, DEFAULT_DEGENERACY_WINDOW};
use crate::model::FranckCondonState;
use crate::units::{internal_to_ps, ps_to_internal};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// ρ = |c⟩⟨c|
    FcPure,
    /// ρ = diag(|c_k|²)
    FcMixed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    Full(DensityMatrix),
    Populations(Vec<f64>),
}

/// Density matrix or population vector at a time (ps).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    pub data: StateData,
    pub time_ps: f64,
}

impl DensityState {
    pub fn populations(&self) -> Vec<f64> {
        match &self.data {
            StateData::Full(rho) => rho.populations(),
            StateData::Populations(p) => p.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.data {
            StateData::Full(rho) => rho.dim(),
            StateData::Populations(p) => p.len(),
        }
    }
}

pub fn initial_state(kind: InitialKind, fc: &FranckCondonState) -> DensityState {
    let data = match kind {
        InitialKind::FcPure => StateData::Full(DensityMatrix::pure(&fc.amplitudes)),
        InitialKind::FcMixed => StateData::Full(DensityMatrix::diagonal(&fc.populations())),
    };
    DensityState { data, time_ps: 0.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    Nonsecular,
    Secular,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationPlan {
    pub mode: PropagationMode,
    /// End of the trajectory, ps.
    pub t_end_ps: f64,
    /// Nonsecular → secular handoff in hybrid mode, ps.
    pub t_switch_ps: f64,
    /// First nonzero checkpoint, ps.
    pub t_first_ps: f64,
    pub points_per_decade: usize,
    /// Times (ps) added to the checkpoint grid.
    #[serde(default)]
    pub extra_checkpoints_ps: Vec<f64>,
    pub integrator: IntegratorSettings,
    /// Secular degeneracy window, eV.
    pub degeneracy_window: f64,
    /// Positivity defects below −threshold are logged.
    pub positivity_threshold: f64,
    #[serde(default)]
    pub record_state_populations: bool,
}

impl Default for PropagationPlan {
    fn default() -> Self {
        Self {
            mode: PropagationMode::Hybrid,
            t_end_ps: 1e4,
            t_switch_ps: 10.0,
            t_first_ps: 1e-3,
            points_per_decade: 64,
            extra_checkpoints_ps: Vec::new(),
            integrator: IntegratorSettings::default(),
            degeneracy_window: DEFAULT_DEGENERACY_WINDOW,
            positivity_threshold: 1e-8,
            record_state_populations: false,
        }
    }
}

impl PropagationPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end_ps > 0.0 && self.t_end_ps.is_finite()) {
            return Err(Error::invalid("t_record", "must be finite and > 0"));
        }
        if self.mode == PropagationMode::Hybrid && !(self.t_switch_ps > 0.0) {
            return Err(Error::invalid("t_switch", "must be > 0"));
        }
        if !(self.t_first_ps > 0.0) || self.points_per_decade == 0 {
            return Err(Error::invalid(
                "checkpoints",
                "t_first > 0 and points_per_decade > 0 required",
            ));
        }
        if !(self.degeneracy_window >= 0.0) {
            return Err(Error::invalid("degeneracy_window", "must be >= 0"));
        }
        self.integrator.validate()
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let mut extra = self.extra_checkpoints_ps.clone();
        if self.mode == PropagationMode::Hybrid {
            extra.push(self.t_switch_ps);
        }
        checkpoint_grid(self.t_first_ps, self.t_end_ps, self.points_per_decade, &extra)
    }
}

/// Propagate `rho0` under `diss` and record observables on the plan's grid.
pub fn propagate(
    rho0: &DensityState,
    diss: &DissipatorSet,
    projectors: &TransProjectors,
    plan: &PropagationPlan,
) -> Result<TrajectoryRecord> {
    plan.validate()?;
    if rho0.dim() != diss.len() {
        return Err(Error::Dimension(format!(
            "state has {} levels, dissipator {}",
            rho0.dim(),
            diss.len()
        )));
    }
    if rho0.time_ps != 0.0 {
        return Err(Error::invalid("initial state", "must start at t = 0"));
    }
    let grid = plan.grid()?;
    let mut rec = TrajectoryRecord::default();

    let secular_from = match plan.mode {
        PropagationMode::Secular => 0.0,
        PropagationMode::Hybrid => plan.t_switch_ps.min(plan.t_end_ps),
        PropagationMode::Nonsecular => f64::INFINITY,
    };
    let mut next = 0;

    // nonsecular leg
    let mut handoff = rho0.data.clone();
    if secular_from > 0.0 {
        let StateData::Full(mut rho) = rho0.data.clone() else {
            return Err(Error::invalid(
                "initial state",
                "nonsecular propagation needs a density matrix",
            ));
        };
        let mut integ = NonsecularIntegrator::new(diss, plan.integrator)?;
        let mut t = 0.0;
        while next < grid.len() && grid[next] <= secular_from {
            integ.advance_to(&mut rho, &mut t, ps_to_internal(grid[next]))?;
            record_full(&mut rec, grid[next], &rho, projectors, plan);
            next += 1;
        }
        rec.diagnostics.nonsecular_steps = integ.stats.accepted;
        rec.diagnostics.rejected_steps = integ.stats.rejected;
        rec.diagnostics.rhs_evaluations = integ.stats.evaluations;
        log::debug!(
            "nonsecular leg to {} ps: {} steps, {} rejected, final step {:.3} fs",
            internal_to_ps(t),
            integ.stats.accepted,
            integ.stats.rejected,
            internal_to_ps(integ.step_size()) * 1e3
        );
        if plan.mode == PropagationMode::Hybrid {
            rec.diagnostics.coherence_at_switch = Some(rho.max_coherence());
        }
        handoff = StateData::Full(rho);
    }

    // secular leg
    if next < grid.len() {
        let gen = diss.secular_generator(plan.degeneracy_window);
        let v0 = match &handoff {
            StateData::Full(rho) => gen.project(rho),
            StateData::Populations(p) => {
                let mut v = p.clone();
                v.resize(gen.dim(), 0.0);
                v
            }
        };
        let t0 = if rec.is_empty() { 0.0 } else { secular_from };
        let mut prop = SecularPropagator::new(&gen, &v0)?;
        rec.diagnostics.secular_method = Some(prop.method());
        while next < grid.len() {
            let v = prop.at(ps_to_internal(grid[next] - t0))?;
            let p = &v[..gen.n_states];
            let pops = if gen.pairs.is_empty() {
                projectors.measure_populations(p)
            } else {
                projectors.measure(&gen.lift(&v))
            };
            let trace: f64 = p.iter().sum();
            rec.diagnostics.max_trace_error = rec.diagnostics.max_trace_error.max((trace - 1.0).abs());
            let worst = p.iter().cloned().fold(0.0, f64::min);
            note_positivity(&mut rec, grid[next], worst, plan);
            rec.push(grid[next], pops);
            if plan.record_state_populations {
                rec.state_populations.push(p.to_vec());
            }
            next += 1;
        }
    }
    Ok(rec)
}

fn record_full(
    rec: &mut TrajectoryRecord,
    t_ps: f64,
    rho: &DensityMatrix,
    proj: &TransProjectors,
    plan: &PropagationPlan,
) {
    let d = &mut rec.diagnostics;
    d.max_trace_error = d.max_trace_error.max((rho.trace() - 1.0).abs());
    d.max_hermiticity_deviation = d.max_hermiticity_deviation.max(rho.hermiticity_deviation());
    note_positivity(rec, t_ps, rho.positivity_defect(), plan);
    rec.push(t_ps, proj.measure(rho));
    if plan.record_state_populations {
        rec.state_populations.push(rho.populations());
    }
}

fn note_positivity(rec: &mut TrajectoryRecord, t_ps: f64, defect: f64, plan: &PropagationPlan) {
    let d = &mut rec.diagnostics;
    d.worst_positivity_defect = d.worst_positivity_defect.min(defect);
    if defect < -plan.positivity_threshold {
        if d.positivity_violations.is_empty() {
            log::warn!("positivity defect {defect:.3e} at {t_ps:.4e} ps");
        }
        if d.positivity_violations.len() < 64 {
            d.positivity_violations.push((t_ps, defect));
        }
    }
}

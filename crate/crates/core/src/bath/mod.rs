// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Phonon baths, their Ohmic rate kernels and the Redfield generators built
//! from them in the system eigenbasis.

mod coupling;
pub mod io;
mod redfield;

pub use coupling::{coupling_matrices, coupling_matrix, eigenbasis_operator};
pub use redfield::{DissipatorSet, RedfieldWorkspace, SecularGenerator, DEFAULT_DEGENERACY_WINDOW};

use serde::{Deserialize, Serialize};

use crate::units::beta;
use crate::{Error, Result};

/// System operator a bath couples to. Both act on diabatic state |1⟩ only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathChannel {
    /// |1⟩⟨1| ⊗ x
    TuningX,
    /// |1⟩⟨1| ⊗ (1 − cos φ)
    TorsionPhi,
}

impl BathChannel {
    pub fn name(self) -> &'static str {
        match self {
            BathChannel::TuningX => "tuning_x",
            BathChannel::TorsionPhi => "torsion_phi",
        }
    }
}

/// Ohmic bath with exponential cutoff, J(ω) = ηω e^{−ω/ω_c}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSpec {
    pub channel: BathChannel,
    /// Dimensionless coupling strength η.
    pub eta: f64,
    /// Cutoff frequency ω_c in eV.
    pub omega_c: f64,
    /// Temperature in kelvin; 0 means β → ∞.
    pub temperature: f64,
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("bath.{}.{f}", self.channel.name());
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(field("eta"), format!("must be >= 0, got {}", self.eta)));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return Err(Error::invalid(
                field("omega_c"),
                format!("must be > 0, got {}", self.omega_c),
            ));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid(
                field("temperature"),
                format!("must be >= 0, got {}", self.temperature),
            ));
        }
        Ok(())
    }

    /// J(ω) for ω ≥ 0.
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 {
            return Err(Error::invalid("omega", "spectral density needs omega >= 0"));
        }
        Ok(self.density_unchecked(omega))
    }

    #[inline]
    fn density_unchecked(&self, omega: f64) -> f64 {
        self.eta * omega * (-omega / self.omega_c).exp()
    }

    /// Transition rate for releasing energy ω into the bath: J(ω)(n̄(ω)+1)
    /// for ω > 0, J(|ω|) n̄(|ω|) for ω < 0 and η k_B T at ω = 0.
    pub fn rate_kernel(&self, omega: f64) -> f64 {
        let b = beta(self.temperature);
        if omega == 0.0 {
            return b.map_or(0.0, |b| self.eta / b);
        }
        let w = omega.abs();
        let j = self.density_unchecked(w);
        let n = b.map_or(0.0, |b| bose_einstein(w, b));
        if omega > 0.0 {
            j * (n + 1.0)
        } else {
            j * n
        }
    }

    /// Bose–Einstein occupation n̄(ω) at this bath's temperature.
    pub fn occupation(&self, omega: f64) -> Result<f64> {
        occupation(omega, self.temperature)
    }
}

/// n̄(ω, T) = 1/(e^{βω} − 1); exactly 0 at T = 0.
pub fn occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega", "occupation needs omega > 0"));
    }
    if temperature < 0.0 {
        return Err(Error::invalid("temperature", "must be >= 0"));
    }
    Ok(beta(temperature).map_or(0.0, |b| bose_einstein(omega, b)))
}

#[inline]
fn bose_einstein(omega: f64, beta: f64) -> f64 {
    1.0 / (beta * omega).exp_m1()
}

/// Default baths: both channels with η = 0.1, ω_c = 0.2 eV at 0 K. These bath
/// values are placeholders, not fitted to retinal.
pub fn default_baths() -> Vec<BathSpec> {
    [BathChannel::TuningX, BathChannel::TorsionPhi]
        .into_iter()
        .map(|channel| BathSpec {
            channel,
            eta: 0.1,
            omega_c: 0.2,
            temperature: 0.0,
        })
        .collect()
}

// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scalars of the two-state two-mode Hamiltonian, all in eV.
///
/// The defaults are the 2017 retinal parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParameters {
    /// Inverse moment of inertia of the torsional coordinate φ.
    pub m_inv: f64,
    /// Diabatic origin of the ground state |0⟩.
    pub e0: f64,
    /// Diabatic origin of the excited state |1⟩.
    pub e1: f64,
    /// Torsional amplitude on |0⟩.
    pub v0: f64,
    /// Torsional amplitude on |1⟩.
    pub v1: f64,
    /// Tuning-mode frequency.
    pub omega: f64,
    /// Tuning-mode gradient on |1⟩.
    pub kappa: f64,
    /// Diabatic coupling, linear in the tuning mode.
    pub lambda_c: f64,
}

impl Default for ModelParameters {
    fn default() -> Self {
        Self {
            m_inv: 2.80e-3,
            e0: 0.0,
            e1: 2.58,
            v0: 3.56,
            v1: 1.19,
            omega: 0.19,
            kappa: 0.19,
            lambda_c: 0.19,
        }
    }
}

impl ModelParameters {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m_inv", self.m_inv),
            ("e0", self.e0),
            ("e1", self.e1),
            ("v0", self.v0),
            ("v1", self.v1),
            ("omega", self.omega),
            ("kappa", self.kappa),
            ("lambda_c", self.lambda_c),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        for (name, value) in [
            ("m_inv", self.m_inv),
            ("v0", self.v0),
            ("v1", self.v1),
            ("omega", self.omega),
        ] {
            if value <= 0.0 {
                return Err(Error::invalid(name, format!("must be > 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate) but admits zero torsional amplitudes,
    /// used for the separable reference limit.
    pub(crate) fn validate_assembly(&self) -> Result<()> {
        for (name, value) in [("m_inv", self.m_inv), ("omega", self.omega)] {
            if !(value > 0.0) {
                return Err(Error::invalid(name, format!("must be > 0, got {value}")));
            }
        }
        for (name, value) in [("v0", self.v0), ("v1", self.v1)] {
            if !(value >= 0.0) {
                return Err(Error::invalid(name, format!("must be >= 0, got {value}")));
            }
        }
        for (name, value) in [
            ("e0", self.e0),
            ("e1", self.e1),
            ("kappa", self.kappa),
            ("lambda_c", self.lambda_c),
        ] {
            if !value.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// The uncoupled, untwisted limit (κ = λ = V0 = V1 = 0) whose spectrum is a
    /// sum of rotor and oscillator ladders.
    pub fn separable(&self) -> Self {
        Self {
            v0: 0.0,
            v1: 0.0,
            kappa: 0.0,
            lambda_c: 0.0,
            ..*self
        }
    }

    /// Energy stored in the trans photoproduct, E1 − V1.
    pub fn energy_storage(&self) -> f64 {
        self.e1 - self.v1
    }

    /// Vertical gap of the trans product, V0 − E1 + V1.
    pub fn trans_optical_gap(&self) -> f64 {
        self.v0 - self.e1 + self.v1
    }

    /// Harmonic torsional frequency in the cis well, √(m⁻¹·V0/2).
    pub fn torsional_frequency(&self) -> f64 {
        (self.m_inv * self.v0 / 2.0).sqrt()
    }

    pub fn apply_variation(&self, variation: ParameterVariation) -> Result<Self> {
        let mut out = *self;
        match variation {
            ParameterVariation::ScaleInverseMass(f) => {
                check_factor("m_inv factor", f)?;
                out.m_inv *= f;
            }
            ParameterVariation::ShiftGap(delta) => {
                if !delta.is_finite() {
                    return Err(Error::invalid("e1 shift", "must be finite"));
                }
                out.e1 += delta;
                out.v1 -= delta;
                if out.v1 <= 0.0 {
                    return Err(Error::invalid(
                        "e1 shift",
                        format!("shift {delta} eV drives v1 to {} <= 0", out.v1),
                    ));
                }
            }
            ParameterVariation::ScaleOmega(f) => {
                check_factor("omega factor", f)?;
                out.omega *= f;
            }
            ParameterVariation::ScaleCoupling(f) => {
                if !f.is_finite() {
                    return Err(Error::invalid("lambda_c factor", "must be finite"));
                }
                out.lambda_c *= f;
            }
        }
        out.validate()?;
        Ok(out)
    }
}

fn check_factor(field: &str, f: f64) -> Result<()> {
    if !(f.is_finite() && f > 0.0) {
        return Err(Error::invalid(field, format!("must be > 0, got {f}")));
    }
    Ok(())
}

/// One-parameter deformation of [`ModelParameters`] used by sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ParameterVariation {
    /// m⁻¹ → f·m⁻¹.
    ScaleInverseMass(f64),
    /// E1 → E1 + δ and V1 → V1 − δ, holding E1 + V1 fixed.
    ShiftGap(f64),
    /// ω → f·ω.
    ScaleOmega(f64),
    /// λ → f·λ.
    ScaleCoupling(f64),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_2017_set() {
        let p = ModelParameters::default();
        assert_eq!(
            [p.m_inv, p.e0, p.e1, p.v0, p.v1, p.omega, p.kappa, p.lambda_c],
            [2.80e-3, 0.0, 2.58, 3.56, 1.19, 0.19, 0.19, 0.19]
        );
        p.validate().unwrap();
    }

    #[test]
    fn storage_and_product_gap() {
        let p = ModelParameters::default();
        assert!((p.energy_storage() - 1.39).abs() < 1e-12);
        assert!((p.trans_optical_gap() - 2.17).abs() < 1e-12);
    }

    #[test]
    fn gap_shift_keeps_e1_plus_v1() {
        let p = ModelParameters::default();
        let q = p.apply_variation(ParameterVariation::ShiftGap(0.05 * p.e1)).unwrap();
        assert!((q.e1 - 2.709).abs() < 1e-12);
        assert!((q.v1 - 1.061).abs() < 1e-12);
        assert!((q.e1 + q.v1 - 3.77).abs() < 1e-12);
        assert_eq!(q.m_inv, p.m_inv);
        assert_eq!(q.v0, p.v0);
    }

    #[test]
    fn identity_variations() {
        let p = ModelParameters::default();
        for v in [
            ParameterVariation::ScaleInverseMass(1.0),
            ParameterVariation::ShiftGap(0.0),
            ParameterVariation::ScaleOmega(1.0),
            ParameterVariation::ScaleCoupling(1.0),
        ] {
            assert_eq!(p.apply_variation(v).unwrap(), p);
        }
    }

    #[test]
    fn inverse_mass_pair_for_tree_comparison() {
        let p = ModelParameters::default();
        let a = p.apply_variation(ParameterVariation::ScaleInverseMass(1.013)).unwrap();
        let b = p.apply_variation(ParameterVariation::ScaleInverseMass(1.014)).unwrap();
        assert!((a.m_inv - 2.8364e-3).abs() < 1e-15);
        assert!((b.m_inv - 2.8392e-3).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonphysical_variations() {
        let p = ModelParameters::default();
        assert!(p.apply_variation(ParameterVariation::ShiftGap(1.19)).is_err());
        assert!(p.apply_variation(ParameterVariation::ScaleInverseMass(0.0)).is_err());
        assert!(p.apply_variation(ParameterVariation::ScaleInverseMass(-1.0)).is_err());
        assert!(p.apply_variation(ParameterVariation::ScaleOmega(f64::NAN)).is_err());
    }

    #[test]
    fn rejects_non_positive_parameters() {
        let mut p = ModelParameters::default();
        p.v0 = 0.0;
        assert!(p.validate().is_err());
        assert!(p.validate_assembly().is_ok());
        p.m_inv = -1.0;
        assert!(p.validate_assembly().is_err());
    }
}

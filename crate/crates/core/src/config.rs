// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration.
//!
//! Model and basis values default to the published parameter set. Bath
//! couplings have no published values and must be given explicitly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bath::{BathChannel, BathSpec, DEFAULT_DEGENERACY_WINDOW};
use crate::chaos::{SpectrumSector, DEFAULT_LOCAL_WINDOW};
use crate::dynamics::{InitialKind, IntegratorSettings, PropagationMode, PropagationPlan};
use crate::model::{BasisSpec, ModelParameters, ParameterVariation, ParitySectors, DEFAULT_FC_FLOOR};
use crate::{Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Durations are written as strings with a unit suffix, e.g. `"10 ns"`.
mod duration {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::units::{format_duration_ps, parse_duration_ps};

    pub fn serialize<S: Serializer>(t: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_duration_ps(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let text = String::deserialize(d)?;
        parse_duration_ps(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub model: ModelParameters,
    #[serde(default)]
    pub basis: BasisSpec,
    /// Required for anything that propagates; spectra and level statistics
    /// run without baths.
    #[serde(default)]
    pub baths: Vec<BathConfig>,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub nnsd: NnsdConfig,
    #[serde(default)]
    pub tree: TreeConfig,
}

/// Bath entry as written; `eta` and `omega_c` are checked for presence in
/// [`RunConfig::validate`] so the error can name the entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub channel: BathChannel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    /// kelvin
    #[serde(default)]
    pub temperature: f64,
}

impl From<BathSpec> for BathConfig {
    fn from(b: BathSpec) -> Self {
        Self {
            channel: b.channel,
            eta: Some(b.eta),
            omega_c: Some(b.omega_c),
            temperature: b.temperature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub initial: InitialKind,
    pub mode: PropagationMode,
    #[serde(with = "duration")]
    pub t_record: f64,
    #[serde(with = "duration")]
    pub t_switch: f64,
    #[serde(with = "duration")]
    pub t_first: f64,
    /// QY deviations are reported up to this time.
    #[serde(with = "duration")]
    pub transient_window: f64,
    pub points_per_decade: usize,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// eV
    pub degeneracy_window: f64,
    pub fc_floor: f64,
    pub positivity_threshold: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        let plan = PropagationPlan::default();
        Self {
            initial: InitialKind::FcPure,
            mode: plan.mode,
            t_record: plan.t_end_ps,
            t_switch: plan.t_switch_ps,
            t_first: plan.t_first_ps,
            transient_window: 0.5,
            points_per_decade: plan.points_per_decade,
            rtol: plan.integrator.rtol,
            atol: plan.integrator.atol,
            max_steps: plan.integrator.max_steps,
            degeneracy_window: DEFAULT_DEGENERACY_WINDOW,
            fc_floor: DEFAULT_FC_FLOOR,
            positivity_threshold: plan.positivity_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// factors applied to m⁻¹
    MInv,
    /// offsets (eV) added to E1 with V1 reduced by the same amount
    E1,
    /// factors applied to ω
    Omega,
    /// factors applied to λ
    LambdaC,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::MInv => "m_inv",
            SweepParameter::E1 => "e1",
            SweepParameter::Omega => "omega",
            SweepParameter::LambdaC => "lambda_c",
        }
    }

    pub fn variation(self, value: f64) -> ParameterVariation {
        match self {
            SweepParameter::MInv => ParameterVariation::ScaleInverseMass(value),
            SweepParameter::E1 => ParameterVariation::ShiftGap(value),
            SweepParameter::Omega => ParameterVariation::ScaleOmega(value),
            SweepParameter::LambdaC => ParameterVariation::ScaleCoupling(value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

/// One swept parameter over either explicit `values` or a linear `grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl SweepConfig {
    pub fn points(&self) -> Result<Vec<f64>> {
        let pts = match (&self.values, &self.grid) {
            (Some(v), None) => v.clone(),
            (None, Some(g)) => {
                if g.points == 0 {
                    return Err(Error::config("sweep.grid.points", "must be >= 1"));
                }
                if g.points == 1 {
                    vec![g.start]
                } else {
                    let step = (g.stop - g.start) / (g.points - 1) as f64;
                    (0..g.points)
                        .map(|i| {
                            if i + 1 == g.points {
                                g.stop
                            } else {
                                g.start + step * i as f64
                            }
                        })
                        .collect()
                }
            }
            _ => return Err(Error::config("sweep", "give exactly one of `values` or `grid`")),
        };
        if pts.is_empty() {
            return Err(Error::config("sweep.values", "empty"));
        }
        if pts.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("sweep.values", "must be finite"));
        }
        let up = pts.windows(2).all(|w| w[1] > w[0]);
        let down = pts.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::config("sweep.values", "must be strictly monotone"));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// also write per-eigenstate populations
    pub state_populations: bool,
    /// also write the binary eigenvector blob
    pub coefficients: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            state_populations: false,
            coefficients: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnsdConfig {
    /// [lo, hi) in eV
    pub bands: Vec<[f64; 2]>,
    pub k: usize,
    pub sector: SpectrumSector,
    pub bins: usize,
    /// Basis for the spectrum; its cutoff must reach the top band edge.
    pub basis: BasisSpec,
}

impl Default for NnsdConfig {
    fn default() -> Self {
        Self {
            bands: vec![[0.0, 4.0], [4.0, 6.4]],
            k: DEFAULT_LOCAL_WINDOW,
            sector: SpectrumSector::Even,
            bins: 40,
            basis: BasisSpec {
                n_rotor_max: 70,
                n_ho: 50,
                energy_cutoff: 6.4,
                parity_split: true,
                sectors: ParitySectors::Both,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeRoot {
    Brightest,
    State(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub root: TreeRoot,
    pub degree: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node_cap: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            root: TreeRoot::Brightest,
            degree: 2,
            node_cap: None,
        }
    }
}

fn in_section(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { field, reason } => Error::config(format!("{section}.{field}"), reason),
        other => other,
    }
}

impl RunConfig {
    /// Published model and basis, no baths.
    pub fn published() -> Self {
        Self::with_baths(&[])
    }

    /// Published model and basis, the given baths, default dynamics.
    pub fn with_baths(baths: &[BathSpec]) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            model: ModelParameters::default(),
            basis: BasisSpec::default(),
            baths: baths.iter().copied().map(BathConfig::from).collect(),
            dynamics: DynamicsConfig::default(),
            sweep: None,
            output: OutputConfig::default(),
            nnsd: NnsdConfig::default(),
            tree: TreeConfig::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::config("toml", e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config { field, message } => Error::config(field, format!("{message} (in {})", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("toml", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {CONFIG_SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        self.model.validate().map_err(|e| in_section("model", e))?;
        self.basis.validate().map_err(|e| in_section("basis", e))?;
        if !self.baths.is_empty() {
            self.bath_specs()?;
        }
        self.plan()?.validate().map_err(|e| in_section("dynamics", e))?;
        let d = &self.dynamics;
        if !(0.0..=1.0).contains(&d.fc_floor) {
            return Err(Error::config("dynamics.fc_floor", "must lie in [0, 1]"));
        }
        if !(d.transient_window > 0.0 && d.transient_window <= d.t_record) {
            return Err(Error::config("dynamics.transient_window", "must lie in (0, t_record]"));
        }
        if let Some(s) = &self.sweep {
            for v in s.points()? {
                self.model
                    .apply_variation(s.parameter.variation(v))
                    .map_err(|e| in_section("sweep", e))?;
            }
        }
        if self.output.dir.trim().is_empty() {
            return Err(Error::config("output.dir", "must not be empty"));
        }
        let n = &self.nnsd;
        if n.k == 0 {
            return Err(Error::config("nnsd.k", "must be >= 1"));
        }
        if n.bins == 0 {
            return Err(Error::config("nnsd.bins", "must be >= 1"));
        }
        if n.bands.is_empty() {
            return Err(Error::config("nnsd.bands", "at least one band required"));
        }
        for (i, [lo, hi]) in n.bands.iter().enumerate() {
            if !(hi > lo) {
                return Err(Error::config(
                    format!("nnsd.bands[{i}]"),
                    "upper edge must exceed lower",
                ));
            }
            if *hi > n.basis.energy_cutoff {
                return Err(Error::config(
                    format!("nnsd.bands[{i}]"),
                    format!("reaches {hi} eV above nnsd.basis.energy_cutoff"),
                ));
            }
        }
        n.basis.validate().map_err(|e| in_section("nnsd.basis", e))?;
        if self.tree.degree == 0 {
            return Err(Error::config("tree.degree", "must be >= 1"));
        }
        Ok(())
    }

    /// Bath specifications with every required field present.
    pub fn bath_specs(&self) -> Result<Vec<BathSpec>> {
        if self.baths.is_empty() {
            return Err(Error::config("baths", "at least one bath is required"));
        }
        let mut out: Vec<BathSpec> = Vec::with_capacity(self.baths.len());
        for (i, b) in self.baths.iter().enumerate() {
            let need = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| {
                    Error::config(
                        format!("baths[{i}].{name}"),
                        "required; bath couplings have no built-in default",
                    )
                })
            };
            let spec = BathSpec {
                channel: b.channel,
                eta: need(b.eta, "eta")?,
                omega_c: need(b.omega_c, "omega_c")?,
                temperature: b.temperature,
            };
            spec.validate().map_err(|e| match e {
                Error::InvalidParameter { field, reason } => {
                    let name = field.rsplit('.').next().unwrap_or(&field).to_string();
                    Error::config(format!("baths[{i}].{name}"), reason)
                }
                other => other,
            })?;
            if out.iter().any(|o| o.channel == spec.channel) {
                return Err(Error::config(
                    format!("baths[{i}].channel"),
                    format!("duplicate channel {}", spec.channel.name()),
                ));
            }
            out.push(spec);
        }
        Ok(out)
    }

    pub fn plan(&self) -> Result<PropagationPlan> {
        let d = &self.dynamics;
        Ok(PropagationPlan {
            mode: d.mode,
            t_end_ps: d.t_record,
            t_switch_ps: d.t_switch,
            t_first_ps: d.t_first,
            points_per_decade: d.points_per_decade,
            extra_checkpoints_ps: vec![d.transient_window],
            integrator: IntegratorSettings {
                rtol: d.rtol,
                atol: d.atol,
                max_steps: d.max_steps,
                ..IntegratorSettings::default()
            },
            degeneracy_window: d.degeneracy_window,
            positivity_threshold: d.positivity_threshold,
            record_state_populations: self.output.state_populations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::default_baths;

    const MINIMAL: &str = r#"
schema_version = 1

[[baths]]
channel = "tuning_x"
eta = 0.1
omega_c = 0.2

[[baths]]
channel = "torsion_phi"
eta = 0.1
omega_c = 0.2
"#;

    #[test]
    fn minimal_file_takes_published_defaults() {
        let c = RunConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.model, ModelParameters::default());
        assert_eq!(c.basis, BasisSpec::default());
        assert_eq!(c.bath_specs().unwrap(), default_baths());
        assert_eq!(c.dynamics.t_record, 1e4);
        assert_eq!(c.dynamics.t_switch, 10.0);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn missing_bath_value_names_the_field() {
        let text = MINIMAL.replacen("omega_c = 0.2\n", "", 1);
        let msg = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(msg.contains("baths[0].omega_c"), "{msg}");
        let text = MINIMAL.replace("eta = 0.1\n", "");
        let msg = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(msg.contains("baths[0].eta"), "{msg}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let text = format!("{MINIMAL}\n[model]\nm_inv = -1.0\n");
        let msg = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(msg.contains("model.m_inv"), "{msg}");
        let text = MINIMAL.replacen("eta = 0.1", "eta = -0.1", 1);
        let msg = RunConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(msg.contains("baths[0].eta"), "{msg}");
        let text = format!("{MINIMAL}\n[dynamics]\nt_record = \"10\"\n");
        assert!(RunConfig::from_toml_str(&text)
            .unwrap_err()
            .to_string()
            .contains("unit"));
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(RunConfig::from_toml_str(&format!("{MINIMAL}\n[model]\nmass = 1.0\n")).is_err());
        let msg = RunConfig::from_toml_str(&MINIMAL.replace("schema_version = 1", "schema_version = 2"))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("schema_version"), "{msg}");
    }

    #[test]
    fn time_suffixes() {
        let text = format!("{MINIMAL}\n[dynamics]\nt_record = \"2 ns\"\nt_switch = \"500 fs\"\n");
        let c = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(c.dynamics.t_record, 2000.0);
        assert_eq!(c.dynamics.t_switch, 0.5);
        let p = c.plan().unwrap();
        assert_eq!(p.t_end_ps, 2000.0);
    }

    #[test]
    fn sweep_validation() {
        let ok =
            format!("{MINIMAL}\n[sweep]\nparameter = \"m_inv\"\ngrid = {{ start = 0.95, stop = 1.05, points = 41 }}\n");
        let c = RunConfig::from_toml_str(&ok).unwrap();
        let pts = c.sweep.unwrap().points().unwrap();
        assert_eq!(pts.len(), 41);
        assert_eq!(pts[0], 0.95);
        assert_eq!(pts[40], 1.05);
        assert!((pts[20] - 1.0).abs() < 1e-15);

        let both = format!("{MINIMAL}\n[sweep]\nparameter = \"m_inv\"\nvalues = [1.0]\ngrid = {{ start = 0.9, stop = 1.0, points = 3 }}\n");
        assert!(RunConfig::from_toml_str(&both).is_err());
        let non_monotone = format!("{MINIMAL}\n[sweep]\nparameter = \"m_inv\"\nvalues = [1.0, 1.1, 1.05]\n");
        let msg = RunConfig::from_toml_str(&non_monotone).unwrap_err().to_string();
        assert!(msg.contains("monotone"), "{msg}");
        let down = format!("{MINIMAL}\n[sweep]\nparameter = \"e1\"\nvalues = [0.1, 0.0, -0.1]\n");
        assert!(RunConfig::from_toml_str(&down).is_ok());
        let bad = format!("{MINIMAL}\n[sweep]\nparameter = \"e1\"\nvalues = [0.0, 2.0]\n");
        assert!(RunConfig::from_toml_str(&bad).is_err());
        let two = format!("{MINIMAL}\n[sweep]\nparameter = [\"m_inv\", \"e1\"]\nvalues = [1.0]\n");
        assert!(RunConfig::from_toml_str(&two).is_err());
    }

    #[test]
    fn round_trip_is_lossless() {
        let mut c = RunConfig::with_baths(&default_baths());
        c.model.m_inv *= 1.013;
        c.dynamics.t_switch = 0.1 + 0.2;
        c.dynamics.rtol = 1.234_567_890_123e-7;
        c.baths[1].temperature = 300.0;
        c.sweep = Some(SweepConfig {
            parameter: SweepParameter::E1,
            values: Some(vec![-0.05, 0.0, 0.05]),
            grid: None,
        });
        c.tree.root = TreeRoot::State(17);
        c.tree.node_cap = Some(40);
        let text = c.to_toml().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_toml().unwrap(), text);
    }

    #[test]
    fn baths_are_only_needed_for_dynamics() {
        let c = RunConfig::from_toml_str("schema_version = 1\n").unwrap();
        assert!(c.baths.is_empty());
        let msg = c.bath_specs().unwrap_err().to_string();
        assert!(msg.contains("baths"), "{msg}");
        assert_eq!(c, RunConfig::published());
    }

    #[test]
    fn duplicate_channels_rejected() {
        let text = MINIMAL.replace("torsion_phi", "tuning_x");
        assert!(RunConfig::from_toml_str(&text)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
    }
}

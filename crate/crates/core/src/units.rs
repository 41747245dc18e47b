// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Unit conversions. Energies are eV throughout and `ħ = 1`, so one internal
//! time unit is ħ/eV.

use crate::{Error, Result};

/// ħ in eV·fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;

/// Boltzmann constant in eV/K.
pub const K_B_EV_PER_K: f64 = 8.617_333_262e-5;

/// Picoseconds to internal time units (ħ/eV).
pub fn ps_to_internal(t_ps: f64) -> f64 {
    t_ps * 1000.0 / HBAR_EV_FS
}

/// Internal time units (ħ/eV) to picoseconds.
pub fn internal_to_ps(t: f64) -> f64 {
    t * HBAR_EV_FS / 1000.0
}

/// Inverse temperature β in 1/eV; `None` at zero temperature.
pub fn beta(temperature_k: f64) -> Option<f64> {
    (temperature_k > 0.0).then(|| 1.0 / (K_B_EV_PER_K * temperature_k))
}

/// Parse a duration such as `"10 ns"`, `"500fs"` or `"2.5 ps"` into picoseconds.
///
/// A bare number is rejected: the unit suffix is mandatory.
pub fn parse_duration_ps(text: &str) -> Result<f64> {
    let s = text.trim();
    let split = s
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(|| Error::config("time", format!("`{s}` lacks a unit suffix (fs, ps, ns)")))?;
    let (num, unit) = s.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::config("time", format!("`{s}` is not a number with unit")))?;
    let scale = match unit.trim() {
        "fs" => 1e-3,
        "ps" => 1.0,
        "ns" => 1e3,
        other => {
            return Err(Error::config(
                "time",
                format!("unknown time unit `{other}` (expected fs, ps or ns)"),
            ))
        }
    };
    if !value.is_finite() || value < 0.0 {
        return Err(Error::config("time", format!("`{s}` must be non-negative")));
    }
    Ok(value * scale)
}

/// Format picoseconds with the largest unit that reads back exactly through
/// [`parse_duration_ps`].
pub fn format_duration_ps(t_ps: f64) -> String {
    for (unit, scale) in [("ns", 1e3), ("ps", 1.0), ("fs", 1e-3)] {
        let v = t_ps / scale;
        let text = format!("{v} {unit}");
        if v >= 1.0 && parse_duration_ps(&text).ok() == Some(t_ps) {
            return text;
        }
    }
    format!("{t_ps} ps")
}

// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::observables::RegionPopulations;
use super::secular::SecularMethod;
use crate::{Error, Result};

pub const TRAJECTORY_VERSION: u32 = 1;

/// Observables on the checkpoint grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times_ps: Vec<f64>,
    pub qy: Vec<f64>,
    pub pop_cis_0: Vec<f64>,
    pub pop_cis_1: Vec<f64>,
    pub pop_trans_0: Vec<f64>,
    pub pop_trans_1: Vec<f64>,
    /// Eigenstate populations per checkpoint (empty unless requested).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub state_populations: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// max |Tr ρ − 1| over checkpoints
    pub max_trace_error: f64,
    /// max |ρ − ρ†| over nonsecular checkpoints
    pub max_hermiticity_deviation: f64,
    /// most negative diagonal or 2×2-minor value seen
    pub worst_positivity_defect: f64,
    /// (time ps, defect) for checkpoints beyond the positivity threshold
    pub positivity_violations: Vec<(f64, f64)>,
    /// largest |ρ_ij|, i ≠ j, discarded at the secular handoff
    pub coherence_at_switch: Option<f64>,
    pub nonsecular_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub secular_method: Option<SecularMethod>,
}

impl TrajectoryRecord {
    pub fn push(&mut self, t_ps: f64, pops: RegionPopulations) {
        self.times_ps.push(t_ps);
        self.qy.push(pops.qy());
        self.pop_cis_0.push(pops.cis_0);
        self.pop_cis_1.push(pops.cis_1);
        self.pop_trans_0.push(pops.trans_0);
        self.pop_trans_1.push(pops.trans_1);
    }

    pub fn len(&self) -> usize {
        self.times_ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_ps.is_empty()
    }

    /// QY at `t_ps`, linear in log-time between checkpoints (linear in time
    /// on the first interval when it starts at 0).
    pub fn quantum_yield_at(&self, t_ps: f64) -> Result<f64> {
        interpolate_log_time(&self.times_ps, &self.qy, t_ps)
    }

    /// max |qy(t) − other.qy(t)| over shared checkpoints with t ≤ `t_max_ps`.
    pub fn max_qy_deviation(&self, other: &TrajectoryRecord, t_max_ps: f64) -> Result<f64> {
        let mut dev = 0.0f64;
        let mut any = false;
        for (i, &t) in self.times_ps.iter().enumerate() {
            if t > t_max_ps {
                break;
            }
            let q = other.quantum_yield_at(t)?;
            dev = dev.max((self.qy[i] - q).abs());
            any = true;
        }
        if !any {
            return Err(Error::invalid("t_max", "no checkpoints in window"));
        }
        Ok(dev)
    }

    /// Columnar text: a `#` header naming the format version and manifest
    /// hash, then `time_ps,qy,pop_cis_0,pop_cis_1,pop_trans_0,pop_trans_1`.
    pub fn write_csv<W: Write>(&self, manifest_hash: &str, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# isoyield trajectory v{TRAJECTORY_VERSION} manifest={manifest_hash}"
        )?;
        writeln!(w, "time_ps,qy,pop_cis_0,pop_cis_1,pop_trans_0,pop_trans_1")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{:.9e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                self.times_ps[i],
                self.qy[i],
                self.pop_cis_0[i],
                self.pop_cis_1[i],
                self.pop_trans_0[i],
                self.pop_trans_1[i]
            )?;
        }
        Ok(())
    }

    /// Per-state populations, one row per checkpoint.
    pub fn write_state_populations<W: Write>(&self, manifest_hash: &str, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# isoyield state populations v{TRAJECTORY_VERSION} manifest={manifest_hash}"
        )?;
        let n = self.state_populations.first().map_or(0, Vec::len);
        let mut head = String::from("time_ps");
        for k in 0..n {
            head.push_str(&format!(",p{k}"));
        }
        writeln!(w, "{head}")?;
        for (t, row) in self.times_ps.iter().zip(&self.state_populations) {
            let mut line = format!("{t:.9e}");
            for p in row {
                line.push_str(&format!(",{p:.9e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Read back the observables written by [`write_csv`](Self::write_csv);
    /// returns the record and the manifest hash.
    pub fn read_csv<R: BufRead>(r: R) -> Result<(Self, String)> {
        let bad = |m: String| Error::Format {
            what: "trajectory",
            message: m,
        };
        let mut lines = r.lines();
        let head = lines.next().transpose()?.unwrap_or_default();
        let prefix = format!("# isoyield trajectory v{TRAJECTORY_VERSION} manifest=");
        let hash = head
            .strip_prefix(&prefix)
            .ok_or_else(|| bad(format!("unsupported header {head:?}")))?
            .trim()
            .to_string();
        lines.next().transpose()?;
        let mut rec = TrajectoryRecord::default();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("{line:?}: {e}"))))
                .collect::<Result<_>>()?;
            if v.len() != 6 {
                return Err(bad(format!("expected 6 columns in {line:?}")));
            }
            rec.times_ps.push(v[0]);
            rec.qy.push(v[1]);
            rec.pop_cis_0.push(v[2]);
            rec.pop_cis_1.push(v[3]);
            rec.pop_trans_0.push(v[4]);
            rec.pop_trans_1.push(v[5]);
        }
        Ok((rec, hash))
    }
}

/// Interpolate `values` sampled at increasing `times` (ps).
pub fn interpolate_log_time(times: &[f64], values: &[f64], t: f64) -> Result<f64> {
    let (Some(&start), Some(&end)) = (times.first(), times.last()) else {
        return Err(Error::invalid("trajectory", "empty"));
    };
    if !(t >= start && t <= end) {
        return Err(Error::Extrapolation {
            requested_ps: t,
            start_ps: start,
            end_ps: end,
        });
    }
    let hi = times.partition_point(|&x| x < t);
    if times[hi] == t {
        return Ok(values[hi]);
    }
    let lo = hi - 1;
    let (t0, t1) = (times[lo], times[hi]);
    let w = if t0 > 0.0 {
        (t / t0).ln() / (t1 / t0).ln()
    } else {
        (t - t0) / (t1 - t0)
    };
    Ok(values[lo] + w * (values[hi] - values[lo]))
}

/// Logarithmic checkpoint grid in ps: 0, then `t_first·10^{k/per_decade}`
/// below `t_end`, then `t_end`. `extra` times are merged in.
pub fn checkpoint_grid(t_first_ps: f64, t_end_ps: f64, per_decade: usize, extra: &[f64]) -> Result<Vec<f64>> {
    if !(t_first_ps > 0.0 && t_end_ps > 0.0 && per_decade > 0) {
        return Err(Error::invalid(
            "checkpoints",
            "need t_first > 0, t_end > 0, per_decade > 0",
        ));
    }
    let mut grid = vec![0.0];
    let mut k = 0;
    loop {
        let t = t_first_ps * 10f64.powf(k as f64 / per_decade as f64);
        if t >= t_end_ps * (1.0 - 1e-12) {
            break;
        }
        grid.push(t);
        k += 1;
    }
    grid.push(t_end_ps);
    for &e in extra {
        if e > 0.0 && e < t_end_ps {
            grid.push(e);
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
    Ok(grid)
}

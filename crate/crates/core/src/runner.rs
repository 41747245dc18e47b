// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Run orchestration and on-disk artifacts.
//!
//! Every run writes into one output directory and finishes by writing
//! `manifest.json`, which records the config hash, the produced files with
//! their SHA-256 and a run summary. Files are staged in a hidden directory
//! and only moved into place once the run has succeeded. Re-running an
//! identical config into a directory with a matching manifest is a no-op
//! unless forced.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bath::DissipatorSet;
use crate::chaos::{band_compare, write_nnsd_csv, NnsdReport, SpacingSample};
use crate::config::{RunConfig, SweepParameter, TreeRoot};
use crate::dynamics::{initial_state, propagate, Diagnostics, PropagationMode, TrajectoryRecord, TransProjectors};
use crate::graph::{build_tree, scattering_rates, RelaxationTree, TreeOptions};
use crate::model::io::{write_blob, write_table};
use crate::model::{franck_condon_state, spectrum, Eigensystem, FranckCondonState, Parity};
use crate::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Eigen,
    Propagate,
    Sweep,
    Nnsd,
    Tree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub kind: RunKind,
    pub config_hash: String,
    pub package_version: String,
    /// the config as TOML
    pub config: String,
    pub files: Vec<FileEntry>,
    pub summary: serde_json::Value,
}

/// Where and how a run writes.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub force: bool,
    /// worker threads for sweeps; `None` uses the rayon default
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            force: false,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<T> {
    pub summary: T,
    pub config_hash: String,
    /// results were already present and nothing was recomputed
    pub reused: bool,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the canonical TOML of `cfg`, ignoring the output directory.
pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.output.dir = String::new();
    Ok(hex(&Sha256::digest(c.to_toml()?.as_bytes())))
}

fn file_sha256(path: &Path) -> Result<(String, u64)> {
    let data = fs::read(path)?;
    Ok((hex(&Sha256::digest(&data)), data.len() as u64))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let m: Manifest = serde_json::from_str(&text)?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::Format {
            what: "manifest",
            message: format!("unsupported version {}", m.version),
        });
    }
    Ok(m)
}

/// Summary of a previous identical run, if the directory holds one intact.
fn reusable<T: DeserializeOwned>(dir: &Path, kind: RunKind, hash: &str, force: bool) -> Result<Option<T>> {
    if !dir.join(MANIFEST_FILE).exists() {
        return Ok(None);
    }
    let m = read_manifest(dir)?;
    if force {
        return Ok(None);
    }
    if m.kind != kind || m.config_hash != hash {
        return Err(Error::config(
            "output.dir",
            format!(
                "{} holds a {:?} run of a different config; pass --force to overwrite",
                dir.display(),
                m.kind
            ),
        ));
    }
    for f in &m.files {
        let p = dir.join(&f.name);
        if !p.exists() || file_sha256(&p)?.0 != f.sha256 {
            log::info!("{} is missing or modified; recomputing", p.display());
            return Ok(None);
        }
    }
    Ok(Some(serde_json::from_value(m.summary)?))
}

/// Files written during a run; removed unless committed.
struct Staging {
    dir: PathBuf,
    target: PathBuf,
    files: Vec<String>,
    committed: bool,
}

impl Staging {
    fn new(target: &Path, kind: RunKind) -> Result<Self> {
        fs::create_dir_all(target)?;
        let dir = target.join(format!(".partial-{kind:?}").to_lowercase());
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir)?;
        Ok(Self {
            dir,
            target: target.to_path_buf(),
            files: Vec::new(),
            committed: false,
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn write_with(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let mut w = self.create(name)?;
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn commit(mut self, kind: RunKind, cfg: &RunConfig, hash: &str, summary: &impl Serialize) -> Result<()> {
        // drop the previous manifest first so a crash mid-move never leaves
        // a manifest describing mixed files
        let old = self.target.join(MANIFEST_FILE);
        if old.exists() {
            if let Ok(m) = read_manifest(&self.target) {
                for f in m.files {
                    let _ = fs::remove_file(self.target.join(f.name));
                }
            }
            fs::remove_file(&old)?;
        }
        let mut files = Vec::new();
        for name in &self.files {
            let (sha256, bytes) = file_sha256(&self.dir.join(name))?;
            fs::rename(self.dir.join(name), self.target.join(name))?;
            files.push(FileEntry {
                name: name.clone(),
                sha256,
                bytes,
            });
        }
        let manifest = Manifest {
            version: MANIFEST_VERSION,
            kind,
            config_hash: hash.to_string(),
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.to_toml()?,
            files,
            summary: serde_json::to_value(summary)?,
        };
        let tmp = self.dir.join(MANIFEST_FILE);
        fs::write(&tmp, serde_json::to_string_pretty(&manifest)? + "\n")?;
        fs::rename(&tmp, &old)?;
        fs::remove_dir(&self.dir)?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub states: usize,
    pub even: usize,
    pub odd: usize,
    pub ground_energy: f64,
    pub primitive_dim: usize,
    pub max_edge_weight: f64,
}

/// Diagonalize and write `eigensystem.tsv` (and `coefficients.bin`).
pub fn run_eigen(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome<EigenSummary>> {
    cfg.validate()?;
    let hash = config_hash(cfg)?;
    if let Some(summary) = reusable(&opts.out_dir, RunKind::Eigen, &hash, opts.force)? {
        return Ok(RunOutcome {
            summary,
            config_hash: hash,
            reused: true,
        });
    }
    let es = Eigensystem::solve(&cfg.model, &cfg.basis)?;
    let mut st = Staging::new(&opts.out_dir, RunKind::Eigen)?;
    write_eigensystem(&mut st, &es, cfg, &hash)?;
    let summary = EigenSummary {
        states: es.len(),
        even: es.parity().iter().filter(|&&p| p > 0).count(),
        odd: es.parity().iter().filter(|&&p| p < 0).count(),
        ground_energy: es.energies().first().copied().unwrap_or(f64::NAN),
        primitive_dim: es.primitive_dim(),
        max_edge_weight: es.edge_weights().iter().copied().fold(0.0, f64::max),
    };
    st.commit(RunKind::Eigen, cfg, &hash, &summary)?;
    Ok(RunOutcome {
        summary,
        config_hash: hash,
        reused: false,
    })
}

fn write_eigensystem(st: &mut Staging, es: &Eigensystem, cfg: &RunConfig, hash: &str) -> Result<()> {
    st.write_with("eigensystem.tsv", |w| write_table(es, hash, w))?;
    if cfg.output.coefficients {
        st.write_with("coefficients.bin", |w| write_blob(es, hash, w))?;
    }
    Ok(())
}

/// Eigensystem on which dynamics runs: the φ-parity sector of the ground
/// state when the basis is split, since the initial state and both bath
/// operators preserve that parity.
pub fn dynamics_eigensystem(cfg: &RunConfig) -> Result<Eigensystem> {
    let es = Eigensystem::solve(&cfg.model, &cfg.basis)?;
    if !cfg.basis.parity_split {
        return Ok(es);
    }
    let g = es
        .ground_index()
        .ok_or_else(|| Error::invalid("basis", "no states below the cutoff"))?;
    match Parity::from_sign(es.parity()[g]) {
        Some(p) => es.sector(p),
        None => Ok(es),
    }
}

/// Everything a propagation needs besides the plan.
pub struct Prepared {
    pub eigensystem: Eigensystem,
    pub fc: FranckCondonState,
    pub dissipator: DissipatorSet,
    pub projectors: TransProjectors,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let eigensystem = dynamics_eigensystem(cfg)?;
    let fc = franck_condon_state(&eigensystem, cfg.dynamics.fc_floor)?;
    let dissipator = DissipatorSet::build(&eigensystem, &cfg.bath_specs()?)?;
    let projectors = TransProjectors::build(&eigensystem);
    Ok(Prepared {
        eigensystem,
        fc,
        dissipator,
        projectors,
    })
}

impl Prepared {
    pub fn run(&self, cfg: &RunConfig, mode: PropagationMode) -> Result<TrajectoryRecord> {
        let mut plan = cfg.plan()?;
        plan.mode = mode;
        let rho0 = initial_state(cfg.dynamics.initial, &self.fc);
        propagate(&rho0, &self.dissipator, &self.projectors, &plan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: PropagationMode,
    pub states: usize,
    pub brightest_index: usize,
    pub fc_captured_weight: f64,
    pub t_record_ps: f64,
    pub qy_at_record: f64,
    pub transient_window_ps: f64,
    /// max QY over t ≤ transient window
    pub qy_transient_peak: f64,
    pub diagnostics: Diagnostics,
}

fn summarize(cfg: &RunConfig, p: &Prepared, mode: PropagationMode, rec: &TrajectoryRecord) -> Result<RunSummary> {
    let window = cfg.dynamics.transient_window;
    let peak = rec
        .times_ps
        .iter()
        .zip(&rec.qy)
        .filter(|(t, _)| **t <= window)
        .map(|(_, q)| *q)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RunSummary {
        mode,
        states: p.eigensystem.len(),
        brightest_index: p.fc.brightest_index,
        fc_captured_weight: p.fc.captured_weight,
        t_record_ps: cfg.dynamics.t_record,
        qy_at_record: rec.quantum_yield_at(cfg.dynamics.t_record)?,
        transient_window_ps: window,
        qy_transient_peak: peak,
        diagnostics: rec.diagnostics.clone(),
    })
}

fn write_propagation(
    cfg: &RunConfig,
    opts: &RunOptions,
    hash: &str,
    p: &Prepared,
    rec: &TrajectoryRecord,
    summary: &RunSummary,
) -> Result<()> {
    let mut st = Staging::new(&opts.out_dir, RunKind::Propagate)?;
    write_eigensystem(&mut st, &p.eigensystem, cfg, hash)?;
    st.write_with("trajectory.csv", |w| rec.write_csv(hash, w))?;
    if cfg.output.state_populations {
        st.write_with("state_populations.csv", |w| rec.write_state_populations(hash, w))?;
    }
    st.write_with("qy.json", |w| {
        serde_json::to_writer_pretty(&mut *w, summary)?;
        writeln!(w)?;
        Ok(())
    })?;
    st.commit(RunKind::Propagate, cfg, hash, summary)
}

/// One propagation in the configured mode.
pub fn run_single(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome<RunSummary>> {
    cfg.validate()?;
    let hash = config_hash(cfg)?;
    if let Some(summary) = reusable(&opts.out_dir, RunKind::Propagate, &hash, opts.force)? {
        return Ok(RunOutcome {
            summary,
            config_hash: hash,
            reused: true,
        });
    }
    let p = prepare(cfg)?;
    let rec = p.run(cfg, cfg.dynamics.mode)?;
    let summary = summarize(cfg, &p, cfg.dynamics.mode, &rec)?;
    write_propagation(cfg, opts, &hash, &p, &rec, &summary)?;
    Ok(RunOutcome {
        summary,
        config_hash: hash,
        reused: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub qy_secular: Option<f64>,
    /// QY of the configured nonsecular or hybrid run
    pub qy_nonsecular: Option<f64>,
    /// max over the transient window of |QY(t) − QY_reference(t)|
    pub qy_transient_max_dev: Option<f64>,
    /// E1 + V1 after the variation (E1 sweeps only)
    pub e1_plus_v1: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub parameter: SweepParameter,
    pub reference_value: f64,
    pub rows: Vec<SweepRow>,
}

/// Value of the swept parameter that leaves the model unchanged.
pub fn reference_value(p: SweepParameter) -> f64 {
    match p {
        SweepParameter::E1 => 0.0,
        _ => 1.0,
    }
}

/// Config of one sweep point, as `run_single` would receive it.
pub fn point_config(cfg: &RunConfig, value: f64) -> Result<RunConfig> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "config has no [sweep] section"))?;
    let mut c = cfg.clone();
    c.sweep = None;
    c.model = cfg.model.apply_variation(sweep.parameter.variation(value))?;
    Ok(c)
}

struct PointResult {
    primary: Option<TrajectoryRecord>,
    secular: TrajectoryRecord,
    qy_nonsecular: Option<f64>,
    e1_plus_v1: f64,
}

fn sweep_point(cfg: &RunConfig, value: f64, dir: &Path, force: bool, write: bool) -> Result<PointResult> {
    let c = point_config(cfg, value)?;
    let p = prepare(&c)?;
    let secular = p.run(&c, PropagationMode::Secular)?;
    let (primary, qy_nonsecular) = match c.dynamics.mode {
        PropagationMode::Secular => (None, None),
        mode => {
            let rec = p.run(&c, mode)?;
            let summary = summarize(&c, &p, mode, &rec)?;
            if write {
                let opts = RunOptions {
                    out_dir: dir.to_path_buf(),
                    force,
                    threads: None,
                };
                write_propagation(&c, &opts, &config_hash(&c)?, &p, &rec, &summary)?;
            }
            (Some(rec), Some(summary.qy_at_record))
        }
    };
    Ok(PointResult {
        primary,
        secular,
        qy_nonsecular,
        e1_plus_v1: c.model.e1 + c.model.v1,
    })
}

/// Run every grid point (in parallel) and write `sweep.csv`. Each point also
/// gets its own `point_NNN` directory with `run_single` artifacts. A failing
/// point is recorded in its row and does not stop the others.
pub fn run_sweep(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome<SweepSummary>> {
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::config("sweep", "config has no [sweep] section"))?;
    let hash = config_hash(cfg)?;
    if let Some(summary) = reusable(&opts.out_dir, RunKind::Sweep, &hash, opts.force)? {
        return Ok(RunOutcome {
            summary,
            config_hash: hash,
            reused: true,
        });
    }
    let values = sweep.points()?;
    let reference = reference_value(sweep.parameter);
    fs::create_dir_all(&opts.out_dir)?;
    let dirs: Vec<PathBuf> = (0..values.len())
        .map(|i| opts.out_dir.join(format!("point_{i:03}")))
        .collect();

    let work = || -> Vec<Result<PointResult>> {
        values
            .par_iter()
            .zip(&dirs)
            .map(|(&v, d)| sweep_point(cfg, v, d, opts.force, true))
            .collect()
    };
    let results = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid("threads", e.to_string()))?
            .install(work),
        None => work(),
    };

    let ref_idx = values.iter().position(|&v| v == reference);
    let extra_reference;
    let reference_run: Option<&PointResult> = match ref_idx {
        Some(i) => results[i].as_ref().ok(),
        None => {
            extra_reference = sweep_point(cfg, reference, &opts.out_dir, opts.force, false);
            if let Err(e) = &extra_reference {
                log::warn!("reference point failed: {e}");
            }
            extra_reference.as_ref().ok()
        }
    };

    let window = cfg.dynamics.transient_window;
    let mut rows = Vec::with_capacity(values.len());
    for (&value, res) in values.iter().zip(&results) {
        let row = match res {
            Ok(r) => {
                let dev = reference_run.and_then(|base| {
                    let (a, b) = match (&r.primary, &base.primary) {
                        (Some(a), Some(b)) => (a, b),
                        _ => (&r.secular, &base.secular),
                    };
                    a.max_qy_deviation(b, window).ok()
                });
                SweepRow {
                    value,
                    qy_secular: r.secular.quantum_yield_at(cfg.dynamics.t_record).ok(),
                    qy_nonsecular: r.qy_nonsecular,
                    qy_transient_max_dev: dev,
                    e1_plus_v1: (sweep.parameter == SweepParameter::E1).then_some(r.e1_plus_v1),
                    error: None,
                }
            }
            Err(e) => {
                log::error!("sweep point {} = {value} failed: {e}", sweep.parameter.name());
                SweepRow {
                    value,
                    qy_secular: None,
                    qy_nonsecular: None,
                    qy_transient_max_dev: None,
                    e1_plus_v1: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    let summary = SweepSummary {
        parameter: sweep.parameter,
        reference_value: reference,
        rows,
    };
    let mut st = Staging::new(&opts.out_dir, RunKind::Sweep)?;
    st.write_with("sweep.csv", |w| write_sweep_csv(&summary, &hash, w))?;
    st.commit(RunKind::Sweep, cfg, &hash, &summary)?;
    Ok(RunOutcome {
        summary,
        config_hash: hash,
        reused: false,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.12e}"))
}

/// `param,qy_secular,qy_nonsecular,qy_transient_max_dev[,e1_plus_v1],status`.
pub fn write_sweep_csv<W: Write>(s: &SweepSummary, hash: &str, mut w: W) -> Result<()> {
    let e1 = s.parameter == SweepParameter::E1;
    writeln!(
        w,
        "# isoyield sweep v1 manifest={hash} parameter={} reference={}",
        s.parameter.name(),
        s.reference_value
    )?;
    write!(w, "param,qy_secular,qy_nonsecular,qy_transient_max_dev")?;
    if e1 {
        write!(w, ",e1_plus_v1")?;
    }
    writeln!(w, ",status")?;
    for r in &s.rows {
        write!(
            w,
            "{},{},{},{}",
            r.value,
            opt(r.qy_secular),
            opt(r.qy_nonsecular),
            opt(r.qy_transient_max_dev)
        )?;
        if e1 {
            write!(w, ",{}", opt(r.e1_plus_v1))?;
        }
        let status = r
            .error
            .as_deref()
            .map_or_else(|| "ok".to_string(), |e| format!("\"error: {}\"", e.replace('"', "'")));
        writeln!(w, ",{status}")?;
    }
    Ok(())
}

/// Level statistics per configured band: `nnsd_report.json` and one
/// `nnsd_band_<i>.csv` per band.
pub fn run_nnsd(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome<NnsdReport>> {
    cfg.validate()?;
    let hash = config_hash(cfg)?;
    if let Some(summary) = reusable(&opts.out_dir, RunKind::Nnsd, &hash, opts.force)? {
        return Ok(RunOutcome {
            summary,
            config_hash: hash,
            reused: true,
        });
    }
    let n = &cfg.nnsd;
    let top = n.bands.iter().map(|b| b[1]).fold(f64::NEG_INFINITY, f64::max);
    let levels = n.sector.select(&spectrum(&cfg.model, &n.basis, top)?);
    let bands: Vec<(f64, f64)> = n.bands.iter().map(|b| (b[0], b[1])).collect();
    let report = band_compare(&levels, &bands, n.k, n.sector)?;
    let mut st = Staging::new(&opts.out_dir, RunKind::Nnsd)?;
    for (i, &b) in bands.iter().enumerate() {
        let sample = SpacingSample::from_band(&levels, b, n.k)?;
        st.write_with(&format!("nnsd_band_{i}.csv"), |w| write_nnsd_csv(&sample, n.bins, w))?;
    }
    st.write_with("nnsd_report.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })?;
    st.commit(RunKind::Nnsd, cfg, &hash, &report)?;
    Ok(RunOutcome {
        summary: report,
        config_hash: hash,
        reused: false,
    })
}

/// Build the relaxation tree and write `tree.dot` and `tree.json`.
pub fn run_tree(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome<RelaxationTree>> {
    cfg.validate()?;
    let hash = config_hash(cfg)?;
    if let Some(summary) = reusable(&opts.out_dir, RunKind::Tree, &hash, opts.force)? {
        return Ok(RunOutcome {
            summary,
            config_hash: hash,
            reused: true,
        });
    }
    let tree = compute_tree(cfg)?;
    let mut st = Staging::new(&opts.out_dir, RunKind::Tree)?;
    st.write_with("tree.dot", |w| tree.write_dot(w))?;
    st.write_with("tree.json", |w| {
        w.write_all(tree.to_json()?.as_bytes())?;
        writeln!(w)?;
        Ok(())
    })?;
    st.commit(RunKind::Tree, cfg, &hash, &tree)?;
    Ok(RunOutcome {
        summary: tree,
        config_hash: hash,
        reused: false,
    })
}

pub fn compute_tree(cfg: &RunConfig) -> Result<RelaxationTree> {
    let es = dynamics_eigensystem(cfg)?;
    let root = match cfg.tree.root {
        TreeRoot::Brightest => franck_condon_state(&es, cfg.dynamics.fc_floor)?.brightest_index,
        TreeRoot::State(k) => k,
    };
    let diss = DissipatorSet::build(&es, &cfg.bath_specs()?)?;
    let rates = scattering_rates(&diss);
    build_tree(
        &rates,
        es.transness(),
        root,
        TreeOptions {
            degree: cfg.tree.degree,
            node_cap: cfg.tree.node_cap,
        },
    )
}

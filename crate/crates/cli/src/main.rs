// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use isoyield::chaos::SpectrumSector;
use isoyield::config::{RunConfig, TreeRoot};
use isoyield::dynamics::PropagationMode;
use isoyield::graph::{compare_trees, overlay_differences, overlay_dot, RelaxationTree};
use isoyield::runner::{self, RunOptions};
use isoyield::units::parse_duration_ps;

#[derive(Parser, Debug)]
#[command(
    name = "isoyield",
    version,
    about = "Open-system photoisomerization runs for the 2S2M retinal model"
)]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Shared {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Recompute even if the output directory holds this run already
    #[arg(long, global = true)]
    force: bool,
    /// Propagation mode (overrides dynamics.mode)
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
    /// Time at which the QY is recorded, with unit, e.g. "10 ns"
    #[arg(long = "t-record", global = true)]
    t_record: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Nonsecular,
    Secular,
    Hybrid,
}

impl From<Mode> for PropagationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Nonsecular => PropagationMode::Nonsecular,
            Mode::Secular => PropagationMode::Secular,
            Mode::Hybrid => PropagationMode::Hybrid,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sector {
    Even,
    Odd,
    Merged,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Diagonalize the model and write the eigensystem
    Eigen,
    /// Propagate from the Franck-Condon state and record the QY
    Propagate,
    /// Run the configured one-parameter sweep
    Sweep,
    /// Nearest-neighbour spacing statistics of the spectrum
    Nnsd {
        /// Energy band LO:HI in eV; repeat for several bands
        #[arg(long = "band")]
        bands: Vec<String>,
        /// Local unfolding window half-width
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum)]
        sector: Option<Sector>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Downhill relaxation tree
    Tree {
        /// "brightest" or an eigenstate index
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long = "node-cap")]
        node_cap: Option<usize>,
        /// tree.json of another run to overlay on this one
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
}

fn parse_band(text: &str) -> Result<[f64; 2]> {
    let (lo, hi) = text
        .split_once(':')
        .with_context(|| format!("band `{text}` must look like LO:HI"))?;
    let lo: f64 = lo.trim().parse().with_context(|| format!("band `{text}`"))?;
    let hi: f64 = hi.trim().parse().with_context(|| format!("band `{text}`"))?;
    Ok([lo, hi])
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.shared.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::published(),
    };
    if let Some(m) = cli.shared.mode {
        cfg.dynamics.mode = m.into();
    }
    if let Some(t) = &cli.shared.t_record {
        cfg.dynamics.t_record = parse_duration_ps(t)?;
    }
    if let Some(o) = &cli.shared.out {
        cfg.output.dir = o.to_string_lossy().into_owned();
    }
    match &cli.command {
        Command::Nnsd { bands, k, sector, bins } => {
            if !bands.is_empty() {
                cfg.nnsd.bands = bands.iter().map(|b| parse_band(b)).collect::<Result<_>>()?;
                let top = cfg.nnsd.bands.iter().map(|b| b[1]).fold(f64::NEG_INFINITY, f64::max);
                cfg.nnsd.basis.energy_cutoff = cfg.nnsd.basis.energy_cutoff.max(top);
            }
            if let Some(k) = k {
                cfg.nnsd.k = *k;
            }
            if let Some(s) = sector {
                cfg.nnsd.sector = match s {
                    Sector::Even => SpectrumSector::Even,
                    Sector::Odd => SpectrumSector::Odd,
                    Sector::Merged => SpectrumSector::Merged,
                };
            }
            if let Some(b) = bins {
                cfg.nnsd.bins = *b;
            }
        }
        Command::Tree {
            root, degree, node_cap, ..
        } => {
            if let Some(r) = root {
                cfg.tree.root = match r.as_str() {
                    "brightest" => TreeRoot::Brightest,
                    s => TreeRoot::State(s.parse().with_context(|| format!("--root `{s}`"))?),
                };
            }
            if let Some(d) = degree {
                cfg.tree.degree = *d;
            }
            if node_cap.is_some() {
                cfg.tree.node_cap = *node_cap;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    let opts = RunOptions {
        out_dir: PathBuf::from(&cfg.output.dir),
        force: cli.shared.force,
        threads: cli.shared.threads,
    };
    if opts.threads == Some(0) {
        bail!("--threads must be >= 1");
    }
    let out = opts.out_dir.display();
    match &cli.command {
        Command::Eigen => {
            let r = runner::run_eigen(&cfg, &opts)?;
            println!(
                "{} eigenstates ({} even, {} odd) below {} eV in {out}{}",
                r.summary.states,
                r.summary.even,
                r.summary.odd,
                cfg.basis.energy_cutoff,
                reused(r.reused)
            );
        }
        Command::Propagate => {
            let r = runner::run_single(&cfg, &opts)?;
            println!(
                "QY({} ps) = {:.6} over {} states, {:?} mode, in {out}{}",
                r.summary.t_record_ps,
                r.summary.qy_at_record,
                r.summary.states,
                r.summary.mode,
                reused(r.reused)
            );
        }
        Command::Sweep => {
            let r = runner::run_sweep(&cfg, &opts)?;
            let failed = r.summary.rows.iter().filter(|row| row.error.is_some()).count();
            println!(
                "{} sweep points ({failed} failed) written to {out}/sweep.csv{}",
                r.summary.rows.len(),
                reused(r.reused)
            );
        }
        Command::Nnsd { .. } => {
            let r = runner::run_nnsd(&cfg, &opts)?;
            for b in &r.summary.bands {
                println!(
                    "[{}, {}) eV: {} levels, D = {:.4}, KS(Wigner) = {:.4}, KS(Poisson) = {:.4}, {}",
                    b.e_min, b.e_max, b.levels, b.mean_spacing, b.ks_wigner, b.ks_poisson, b.verdict
                );
            }
        }
        Command::Tree { overlay, .. } => {
            let r = runner::run_tree(&cfg, &opts)?;
            println!(
                "tree rooted at state {}: {} nodes, {} edges, in {out}{}",
                r.summary.root,
                r.summary.nodes.len(),
                r.summary.edges.len(),
                reused(r.reused)
            );
            if let Some(path) = overlay {
                let other = RelaxationTree::from_json(
                    &fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
                )?;
                let tol = 0.03 * cfg.model.torsional_frequency();
                let cmp = compare_trees(&r.summary, &other, tol);
                let dot = format!("// manifest={}\n{}", r.config_hash, overlay_dot(&r.summary, &other));
                fs::write(opts.out_dir.join("overlay.dot"), dot)?;
                fs::write(
                    opts.out_dir.join("overlay.json"),
                    serde_json::to_string_pretty(&serde_json::json!({
                        "manifest": r.config_hash,
                        "other": path,
                        "differing_nodes": overlay_differences(&r.summary, &other),
                        "comparison": cmp,
                    }))? + "\n",
                )?;
                println!(
                    "overlay: {} mid-l nodes differ, {} of {} near-well nodes moved by more than {:.2e} eV",
                    cmp.mid_difference.len(),
                    cmp.well_shifted.len(),
                    cmp.well_matched,
                    tol
                );
            }
        }
    }
    Ok(())
}

fn reused(r: bool) -> &'static str {
    if r {
        " (unchanged, reused)"
    } else {
        ""
    }
}

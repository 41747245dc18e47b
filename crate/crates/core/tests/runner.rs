// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;

use isoyield::bath::default_baths;
use isoyield::config::{RunConfig, SweepConfig, SweepParameter};
use isoyield::dynamics::{PropagationMode, TrajectoryRecord};
use isoyield::model::io::{read_blob, read_table};
use isoyield::model::{BasisSpec, ParitySectors};
use isoyield::runner::{
    config_hash, point_config, read_manifest, run_eigen, run_single, run_sweep, run_tree, RunKind, RunOptions,
    MANIFEST_FILE,
};

fn small_config() -> RunConfig {
    let mut c = RunConfig::with_baths(&default_baths());
    c.basis = BasisSpec {
        n_rotor_max: 10,
        n_ho: 6,
        energy_cutoff: 2.7,
        parity_split: true,
        sectors: ParitySectors::Both,
    };
    c.dynamics.fc_floor = 0.0;
    c.dynamics.mode = PropagationMode::Hybrid;
    c.dynamics.t_record = 5.0;
    c.dynamics.t_switch = 0.05;
    c.dynamics.transient_window = 0.05;
    c.dynamics.points_per_decade = 8;
    c
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions::new(dir)
}

#[test]
fn single_run_writes_referenced_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let out = run_single(&cfg, &opts(tmp.path())).unwrap();
    assert!(!out.reused);
    let hash = config_hash(&cfg).unwrap();
    assert_eq!(out.config_hash, hash);

    let m = read_manifest(tmp.path()).unwrap();
    assert_eq!(m.kind, RunKind::Propagate);
    assert_eq!(m.config_hash, hash);
    let names: Vec<&str> = m.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(
        names,
        ["eigensystem.tsv", "coefficients.bin", "trajectory.csv", "qy.json"]
    );

    let open = |name: &str| std::io::BufReader::new(fs::File::open(tmp.path().join(name)).unwrap());
    let (rec, h) = TrajectoryRecord::read_csv(open("trajectory.csv")).unwrap();
    assert_eq!(h, hash);
    // the CSV keeps 13 significant digits
    assert!((rec.quantum_yield_at(5.0).unwrap() - out.summary.qy_at_record).abs() < 1e-12);
    let (rows, h) = read_table(open("eigensystem.tsv")).unwrap();
    assert_eq!(h, hash);
    assert_eq!(rows.len(), out.summary.states);
    // dynamics runs in the ground-state parity sector only
    assert!(rows.iter().all(|r| r.parity == 1));
    let (es, h) = read_blob(open("coefficients.bin")).unwrap();
    assert_eq!(h, hash);
    assert_eq!(es.len(), rows.len());
    assert!(!tmp.path().join(".partial-propagate").exists());
}

#[test]
fn rerun_is_a_no_op_unless_forced() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let first = run_single(&cfg, &opts(tmp.path())).unwrap();
    let stamp = fs::metadata(tmp.path().join("trajectory.csv"))
        .unwrap()
        .modified()
        .unwrap();
    let again = run_single(&cfg, &opts(tmp.path())).unwrap();
    assert!(again.reused);
    assert_eq!(again.summary, first.summary);
    assert_eq!(
        fs::metadata(tmp.path().join("trajectory.csv"))
            .unwrap()
            .modified()
            .unwrap(),
        stamp
    );

    let mut forced = opts(tmp.path());
    forced.force = true;
    let third = run_single(&cfg, &forced).unwrap();
    assert!(!third.reused);
    assert_eq!(third.summary, first.summary);

    let mut other = cfg.clone();
    other.model.m_inv *= 1.01;
    let err = run_single(&other, &opts(tmp.path())).unwrap_err().to_string();
    assert!(err.contains("--force"), "{err}");

    // tampering with an artifact triggers recomputation
    fs::write(tmp.path().join("qy.json"), "{}").unwrap();
    assert!(!run_single(&cfg, &opts(tmp.path())).unwrap().reused);
}

#[test]
fn failed_run_leaves_no_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.dynamics.fc_floor = 0.999;
    assert!(run_single(&cfg, &opts(tmp.path())).is_err());
    let left: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
    assert!(left.is_empty());
}

#[test]
fn eigen_run_never_needs_baths_or_dynamics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let out = run_eigen(&cfg, &opts(tmp.path())).unwrap();
    assert_eq!(out.summary.states, out.summary.even + out.summary.odd);
    assert!(out.summary.odd > 0);
    let m = read_manifest(tmp.path()).unwrap();
    assert_eq!(m.kind, RunKind::Eigen);
    assert!(!tmp.path().join("trajectory.csv").exists());
}

#[test]
fn one_point_sweep_matches_single_run() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.sweep = Some(SweepConfig {
        parameter: SweepParameter::MInv,
        values: Some(vec![1.02]),
        grid: None,
    });
    let s = run_sweep(&cfg, &opts(&tmp.path().join("sweep"))).unwrap();
    assert_eq!(s.summary.rows.len(), 1);
    let single_cfg = point_config(&cfg, 1.02).unwrap();
    let single = run_single(&single_cfg, &opts(&tmp.path().join("single"))).unwrap();
    assert_eq!(s.summary.rows[0].qy_nonsecular, Some(single.summary.qy_at_record));
    let a = fs::read(tmp.path().join("sweep/point_000/trajectory.csv")).unwrap();
    let b = fs::read(tmp.path().join("single/trajectory.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_is_thread_count_independent_and_isolates_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config();
    cfg.dynamics.fc_floor = 0.3;
    cfg.sweep = Some(SweepConfig {
        parameter: SweepParameter::E1,
        // the last shift lifts the bright states above the energy cutoff
        values: Some(vec![-0.02, 0.0, 0.02, 0.6]),
        grid: None,
    });
    let mut o1 = opts(&tmp.path().join("t1"));
    o1.threads = Some(1);
    let mut o3 = opts(&tmp.path().join("t3"));
    o3.threads = Some(3);
    let a = run_sweep(&cfg, &o1).unwrap();
    let b = run_sweep(&cfg, &o3).unwrap();
    assert_eq!(a.summary, b.summary);
    assert_eq!(
        fs::read(tmp.path().join("t1/sweep.csv")).unwrap(),
        fs::read(tmp.path().join("t3/sweep.csv")).unwrap()
    );
    let rows = &a.summary.rows;
    assert!(rows[..3].iter().all(|r| r.error.is_none()));
    assert!(rows[3].error.is_some());
    let sum = rows[0].e1_plus_v1.unwrap();
    for r in &rows[..3] {
        assert!((r.e1_plus_v1.unwrap() - sum).abs() < 1e-12);
    }
    // the unshifted point is the reference
    assert_eq!(rows[1].qy_transient_max_dev, Some(0.0));
    assert!(rows[0].qy_transient_max_dev.unwrap() >= 0.0);
    let csv = fs::read_to_string(tmp.path().join("t1/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# isoyield sweep v1 manifest="));
    assert_eq!(
        lines.next().unwrap(),
        "param,qy_secular,qy_nonsecular,qy_transient_max_dev,e1_plus_v1,status"
    );
    assert!(tmp.path().join("t1/point_000").join(MANIFEST_FILE).exists());
    assert!(!tmp.path().join("t1/point_003").join(MANIFEST_FILE).exists());
    assert!(run_sweep(&cfg, &o1).unwrap().reused);
}

#[test]
fn tree_run_emits_dot_and_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let out = run_tree(&cfg, &opts(tmp.path())).unwrap();
    out.summary.check().unwrap();
    let dot = fs::read_to_string(tmp.path().join("tree.dot")).unwrap();
    assert!(dot.starts_with("digraph relaxation_tree"));
    let json = fs::read_to_string(tmp.path().join("tree.json")).unwrap();
    let back = isoyield::graph::RelaxationTree::from_json(&json).unwrap();
    assert_eq!(back, out.summary);
}

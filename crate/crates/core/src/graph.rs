// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Downhill relaxation trees: from a root state, follow each state's
//! strongest population-transfer channels to lower-lying eigenstates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::io::Write;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::bath::DissipatorSet;
use crate::{Error, Result};

pub const TREE_VERSION: u32 = 1;

/// Two rates closer than this (relative to the larger) count as a tie.
const TIE_TOL: f64 = 1e-12;

/// Total transfer rates between eigenstates, `rate(i, j)` for i → j.
#[derive(Debug, Clone)]
pub struct ScatteringRates {
    energies: Vec<f64>,
    k: Mat<f64>,
}

impl ScatteringRates {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Rate i → j. Only meaningful for ε_j < ε_i.
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.k[(to, from)]
    }

    /// Nonzero downhill channels out of `from`, strongest first, ties
    /// resolved by the lower state index.
    pub fn downhill(&self, from: usize) -> Vec<(usize, f64)> {
        let e = self.energies[from];
        let mut out: Vec<(usize, f64)> = (0..self.len())
            .filter(|&j| self.energies[j] < e)
            .map(|j| (j, self.rate(from, j)))
            .filter(|&(_, r)| r > 0.0)
            .collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }
}

/// Rates Σ_b R^(b)_{jj,ii}, i.e. the off-diagonal secular rate matrix.
pub fn scattering_rates(diss: &DissipatorSet) -> ScatteringRates {
    let rates = ScatteringRates {
        energies: diss.energies().to_vec(),
        k: diss.rate_matrix().to_owned(),
    };
    for i in 1..rates.len() {
        if rates.downhill(i).is_empty() {
            log::info!("state {i} has no downhill channel and is an isolated sink");
        }
    }
    rates
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub state: usize,
    pub energy: f64,
    pub transness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationTree {
    pub version: u32,
    pub root: usize,
    pub degree: usize,
    /// in breadth-first discovery order
    pub nodes: Vec<TreeNode>,
    pub edges: Vec<TreeEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeOptions {
    pub degree: usize,
    /// Stop adding nodes once this many are present.
    pub node_cap: Option<usize>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            degree: 2,
            node_cap: None,
        }
    }
}

/// Breadth-first expansion from `root`, keeping each state's `degree`
/// strongest downhill edges.
pub fn build_tree(
    rates: &ScatteringRates,
    transness: &[f64],
    root: usize,
    opts: TreeOptions,
) -> Result<RelaxationTree> {
    let n = rates.len();
    if transness.len() != n {
        return Err(Error::Dimension(format!(
            "{} transness values for {n} states",
            transness.len()
        )));
    }
    if root >= n {
        return Err(Error::invalid("root", format!("state {root} out of range (n = {n})")));
    }
    if opts.degree == 0 {
        return Err(Error::invalid("degree", "must be >= 1"));
    }
    let cap = opts.node_cap.unwrap_or(usize::MAX).max(1);
    let node = |s: usize| TreeNode {
        state: s,
        energy: rates.energies()[s],
        transness: transness[s],
    };
    let mut seen = vec![false; n];
    let mut nodes = vec![node(root)];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(i) = queue.pop_front() {
        let channels = rates.downhill(i);
        let keep = opts.degree.min(channels.len());
        if keep > 0 && keep < channels.len() {
            let (last, next) = (channels[keep - 1], channels[keep]);
            if (last.1 - next.1).abs() <= TIE_TOL * last.1 {
                log::warn!(
                    "state {i}: channels to {} and {} tie at rate {:e}; keeping the lower index",
                    last.0,
                    next.0,
                    last.1
                );
            }
        }
        for &(j, rate) in &channels[..keep] {
            if !seen[j] {
                if nodes.len() >= cap {
                    continue;
                }
                seen[j] = true;
                nodes.push(node(j));
                queue.push_back(j);
            }
            edges.push(TreeEdge { from: i, to: j, rate });
        }
    }
    Ok(RelaxationTree {
        version: TREE_VERSION,
        root,
        degree: opts.degree,
        nodes,
        edges,
    })
}

impl RelaxationTree {
    pub fn node(&self, state: usize) -> Option<&TreeNode> {
        self.nodes.iter().find(|n| n.state == state)
    }

    pub fn out_degree(&self, state: usize) -> usize {
        self.edges.iter().filter(|e| e.from == state).count()
    }

    /// Every edge goes strictly downhill between listed nodes and no node
    /// exceeds the degree bound; this also rules out cycles.
    pub fn check(&self) -> Result<()> {
        let energy: BTreeMap<usize, f64> = self.nodes.iter().map(|n| (n.state, n.energy)).collect();
        if energy.len() != self.nodes.len() {
            return Err(Error::Format {
                what: "tree",
                message: "duplicate node".into(),
            });
        }
        if !energy.contains_key(&self.root) {
            return Err(Error::Format {
                what: "tree",
                message: format!("root {} is not a node", self.root),
            });
        }
        for e in &self.edges {
            let (Some(a), Some(b)) = (energy.get(&e.from), energy.get(&e.to)) else {
                return Err(Error::Format {
                    what: "tree",
                    message: format!("edge {} -> {} leaves the node set", e.from, e.to),
                });
            };
            if !(b < a) {
                return Err(Error::Format {
                    what: "tree",
                    message: format!("edge {} -> {} is not downhill", e.from, e.to),
                });
            }
        }
        if let Some(s) = energy.keys().find(|&&s| self.out_degree(s) > self.degree) {
            return Err(Error::Format {
                what: "tree",
                message: format!("state {s} exceeds out-degree {}", self.degree),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text)?;
        if t.version != TREE_VERSION {
            return Err(Error::Format {
                what: "tree",
                message: format!("unsupported version {}", t.version),
            });
        }
        t.check()?;
        Ok(t)
    }

    /// DOT with `energy` and `transness` on nodes and `rate` on edges.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph relaxation_tree {{");
        let _ = writeln!(s, "  graph [isoyield_version={TREE_VERSION}, root=s{}];", self.root);
        for n in &self.nodes {
            let _ = writeln!(s, "  {};", dot_node(n, n.state == self.root, None));
        }
        for e in &self.edges {
            let _ = writeln!(s, "  s{} -> s{} [rate={:e}];", e.from, e.to, e.rate);
        }
        s.push_str("}\n");
        s
    }

    pub fn write_dot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_dot().as_bytes())?;
        Ok(())
    }
}

fn dot_node(n: &TreeNode, root: bool, marker: Option<&str>) -> String {
    let mut attrs = format!("energy={:.9}, transness={:.6}", n.energy, n.transness);
    if root {
        attrs.push_str(", root=true");
    }
    if let Some(m) = marker {
        let _ = write!(attrs, ", marker=\"{m}\"");
    }
    format!("s{} [{attrs}]", n.state)
}

/// Both trees in one DOT graph. Nodes are tagged `marker="a"`, `"b"` or
/// `"both"` by state index; edges carry the tree they came from.
pub fn overlay_dot(a: &RelaxationTree, b: &RelaxationTree) -> String {
    let in_b: BTreeSet<usize> = b.nodes.iter().map(|n| n.state).collect();
    let in_a: BTreeSet<usize> = a.nodes.iter().map(|n| n.state).collect();
    let mut s = String::new();
    let _ = writeln!(s, "digraph relaxation_overlay {{");
    let _ = writeln!(s, "  graph [isoyield_version={TREE_VERSION}];");
    for (tag, tree, other) in [("a", a, &in_b), ("b", b, &in_a)] {
        let _ = writeln!(s, "  subgraph cluster_{tag} {{");
        for n in &tree.nodes {
            let marker = if other.contains(&n.state) { "both" } else { tag };
            let mut line = dot_node(n, n.state == tree.root, Some(marker));
            line = line.replacen(&format!("s{}", n.state), &format!("{tag}{}", n.state), 1);
            let _ = writeln!(s, "    {line};");
        }
        for e in &tree.edges {
            let _ = writeln!(s, "    {tag}{} -> {tag}{} [rate={:e}];", e.from, e.to, e.rate);
        }
        let _ = writeln!(s, "  }}");
    }
    s.push_str("}\n");
    s
}

/// Number of nodes carrying a one-sided overlay marker.
pub fn overlay_differences(a: &RelaxationTree, b: &RelaxationTree) -> usize {
    let sa: BTreeSet<usize> = a.nodes.iter().map(|n| n.state).collect();
    let sb: BTreeSet<usize> = b.nodes.iter().map(|n| n.state).collect();
    sa.symmetric_difference(&sb).count()
}

/// Node comparison between trees built at neighbouring parameter points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeComparison {
    /// mid-l states present in only one tree
    pub mid_difference: Vec<usize>,
    /// near-well states present in both trees
    pub well_matched: usize,
    /// matched near-well states whose energy moved by more than `tolerance`
    pub well_shifted: Vec<(usize, f64)>,
    pub tolerance: f64,
}

/// Compare trees by state index. Nodes with transness in [0.25, 0.75] form
/// the mid set; nodes within 0.1 of either well (l ≈ 0 or 1) are matched by
/// index and their energy shifts checked against `tolerance` (eV).
pub fn compare_trees(a: &RelaxationTree, b: &RelaxationTree, tolerance: f64) -> TreeComparison {
    let mid = |t: &RelaxationTree| -> BTreeSet<usize> {
        t.nodes
            .iter()
            .filter(|n| (0.25..=0.75).contains(&n.transness))
            .map(|n| n.state)
            .collect()
    };
    let near_well = |n: &TreeNode| n.transness <= 0.1 || n.transness >= 0.9;
    let mid_difference = mid(a).symmetric_difference(&mid(b)).copied().collect();
    let mut well_matched = 0;
    let mut well_shifted = Vec::new();
    for n in a.nodes.iter().filter(|n| near_well(n)) {
        if let Some(m) = b.node(n.state).filter(|m| near_well(m)) {
            well_matched += 1;
            let shift = (m.energy - n.energy).abs();
            if shift > tolerance {
                well_shifted.push((n.state, shift));
            }
        }
    }
    TreeComparison {
        mid_difference,
        well_matched,
        well_shifted,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{default_baths, DissipatorSet};
    use crate::model::basis::{BasisSpec, ParitySectors};
    use crate::model::{franck_condon_state, Eigensystem, ModelParameters};

    fn toy(k: Vec<Vec<f64>>) -> ScatteringRates {
        let n = k.len();
        ScatteringRates {
            energies: (0..n).map(|i| i as f64 * 0.1).collect(),
            // stored as K[to, from]
            k: Mat::from_fn(n, n, |to, from| k[from][to]),
        }
    }

    fn model() -> (Eigensystem, DissipatorSet) {
        let spec = BasisSpec {
            n_rotor_max: 16,
            n_ho: 10,
            energy_cutoff: 2.6,
            parity_split: true,
            sectors: ParitySectors::Even,
        };
        let es = Eigensystem::solve(&ModelParameters::default(), &spec).unwrap();
        let d = DissipatorSet::build(&es, &default_baths()).unwrap();
        (es, d)
    }

    #[test]
    fn keeps_two_strongest_channels() {
        // rows: from-state, columns: to-state
        let r = toy(vec![
            vec![0.0; 4],
            vec![3.0, 0.0, 0.0, 0.0],
            vec![1.0, 2.0, 0.0, 0.0],
            vec![0.5, 0.7, 0.6, 0.0],
        ]);
        let t = build_tree(&r, &[0.0; 4], 3, TreeOptions::default()).unwrap();
        t.check().unwrap();
        let out: Vec<usize> = t.edges.iter().filter(|e| e.from == 3).map(|e| e.to).collect();
        assert_eq!(out, vec![1, 2]);
        assert_eq!(t.out_degree(0), 0);
        assert_eq!(t.nodes.len(), 4);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let r = toy(vec![
            vec![0.0; 4],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![2.0, 2.0, 2.0, 0.0],
        ]);
        let t = build_tree(&r, &[0.0; 4], 3, TreeOptions::default()).unwrap();
        let out: Vec<usize> = t.edges.iter().filter(|e| e.from == 3).map(|e| e.to).collect();
        assert_eq!(out, vec![0, 1]);
    }

    #[test]
    fn root_without_channels_is_alone() {
        let r = toy(vec![vec![0.0; 3]; 3]);
        let t = build_tree(&r, &[0.0; 3], 2, TreeOptions::default()).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert!(t.edges.is_empty());
        assert!(build_tree(&r, &[0.0; 3], 5, TreeOptions::default()).is_err());
    }

    #[test]
    fn node_cap_is_respected() {
        let (es, d) = model();
        let r = scattering_rates(&d);
        let fc = franck_condon_state(&es, 0.0).unwrap();
        let opts = TreeOptions {
            degree: 2,
            node_cap: Some(7),
        };
        let t = build_tree(&r, es.transness(), fc.brightest_index, opts).unwrap();
        assert_eq!(t.nodes.len(), 7);
        t.check().unwrap();
    }

    #[test]
    fn rates_match_tensor_and_k() {
        let (_, d) = model();
        let r = scattering_rates(&d);
        for i in (0..r.len()).step_by(7) {
            for j in 0..i {
                assert_eq!(r.rate(i, j), d.rate_matrix()[(j, i)]);
                let t = d.tensor(j, j, i, i);
                assert!((r.rate(i, j) - t).abs() <= 1e-14 * t.abs().max(1e-300) + 1e-300);
                assert!(r.rate(i, j) >= 0.0);
            }
        }
    }

    #[test]
    fn model_tree_invariants() {
        let (es, d) = model();
        let r = scattering_rates(&d);
        let fc = franck_condon_state(&es, 0.0).unwrap();
        let t = build_tree(&r, es.transness(), fc.brightest_index, TreeOptions::default()).unwrap();
        t.check().unwrap();
        assert_eq!(t.nodes[0].state, fc.brightest_index);
        for e in &t.edges {
            assert_eq!(e.rate, r.rate(e.from, e.to));
            assert!(t.out_degree(e.from) <= 2);
        }
        if let Some(g) = t.node(0) {
            assert_eq!(t.out_degree(g.state), 0);
        }
        // deterministic
        let u = build_tree(&r, es.transness(), fc.brightest_index, TreeOptions::default()).unwrap();
        assert_eq!(t.to_dot(), u.to_dot());
        assert_eq!(t.to_json().unwrap(), u.to_json().unwrap());
    }

    #[test]
    fn json_round_trip_is_identity() {
        let (es, d) = model();
        let r = scattering_rates(&d);
        let t = build_tree(&r, es.transness(), es.len() - 1, TreeOptions::default()).unwrap();
        let text = t.to_json().unwrap();
        let back = RelaxationTree::from_json(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_json().unwrap(), text);
        let bad = text.replacen("\"version\": 1", "\"version\": 9", 1);
        assert!(RelaxationTree::from_json(&bad).is_err());
    }

    #[test]
    fn dot_is_well_formed() {
        let r = toy(vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![0.2, 0.4, 0.0]]);
        let t = build_tree(&r, &[0.0, 0.5, 1.0], 2, TreeOptions::default()).unwrap();
        let dot = t.to_dot();
        assert!(dot.starts_with("digraph relaxation_tree {\n"));
        assert!(dot.ends_with("}\n"));
        assert_eq!(dot.matches("->").count(), t.edges.len());
        assert_eq!(dot.matches('{').count(), dot.matches('}').count());
        assert!(dot.contains("s2 [energy=0.200000000, transness=1.000000, root=true];"));
    }

    #[test]
    fn identical_overlay_has_no_differences() {
        let (es, d) = model();
        let r = scattering_rates(&d);
        let t = build_tree(&r, es.transness(), es.len() - 1, TreeOptions::default()).unwrap();
        assert_eq!(overlay_differences(&t, &t), 0);
        let dot = overlay_dot(&t, &t);
        assert!(!dot.contains("marker=\"a\""));
        assert!(!dot.contains("marker=\"b\""));
        let c = compare_trees(&t, &t, 1e-9);
        assert!(c.mid_difference.is_empty() && c.well_shifted.is_empty());
    }

    #[test]
    fn check_rejects_uphill_edges() {
        let mut t = RelaxationTree {
            version: TREE_VERSION,
            root: 1,
            degree: 2,
            nodes: vec![
                TreeNode {
                    state: 1,
                    energy: 1.0,
                    transness: 0.0,
                },
                TreeNode {
                    state: 0,
                    energy: 0.5,
                    transness: 0.0,
                },
            ],
            edges: vec![TreeEdge {
                from: 1,
                to: 0,
                rate: 1.0,
            }],
        };
        t.check().unwrap();
        t.edges.push(TreeEdge {
            from: 0,
            to: 1,
            rate: 1.0,
        });
        assert!(t.check().is_err());
    }
}

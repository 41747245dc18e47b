// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

use faer::{Mat, MatRef, Side};

use super::basis::{BasisSpec, Parity, ProductBasis, RotorBasis};
use super::hamiltonian::build_hamiltonian;
use super::params::ModelParameters;
use crate::{Error, Result};

/// Squared weight on the basis edge above which a retained state is reported
/// as unconverged.
pub const EDGE_WEIGHT_WARN: f64 = 1e-8;

/// Energy-sorted eigenpairs retained below the cutoff.
///
/// Coefficients are stored against the concatenation of all solved blocks:
/// a state from block `b` is zero outside the rows of that block.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    blocks: Vec<ProductBasis>,
    offsets: Vec<usize>,
    energies: Vec<f64>,
    coefficients: Mat<f64>,
    transness: Vec<f64>,
    parity: Vec<i8>,
    block_of: Vec<usize>,
    edge_weight: Vec<f64>,
}

/// Eigenpairs of a single block before merging.
struct BlockSolution {
    energies: Vec<f64>,
    vectors: Mat<f64>,
}

impl Eigensystem {
    /// Assemble and diagonalize every block of `spec`, keeping states with
    /// ε ≤ `spec.energy_cutoff`.
    pub fn solve(params: &ModelParameters, spec: &BasisSpec) -> Result<Self> {
        spec.validate()?;
        let blocks = spec.blocks();
        let solutions = blocks
            .iter()
            .map(|b| {
                let h = build_hamiltonian(params, b)?;
                diagonalize_block(h.as_ref(), spec.energy_cutoff)
            })
            .collect::<Result<Vec<_>>>()?;
        let es = Self::merge(blocks, solutions);
        es.report_convergence(spec.energy_cutoff);
        Ok(es)
    }

    /// Diagonalize a prepared Hamiltonian of one block.
    pub fn from_block_hamiltonian(h: MatRef<'_, f64>, basis: ProductBasis, cutoff: f64) -> Result<Self> {
        if h.nrows() != basis.dim() || h.ncols() != basis.dim() {
            return Err(Error::Dimension(format!(
                "Hamiltonian is {}x{}, basis has dimension {}",
                h.nrows(),
                h.ncols(),
                basis.dim()
            )));
        }
        let sol = diagonalize_block(h, cutoff)?;
        Ok(Self::merge(vec![basis], vec![sol]))
    }

    fn merge(blocks: Vec<ProductBasis>, solutions: Vec<BlockSolution>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut full_dim = 0;
        for b in &blocks {
            offsets.push(full_dim);
            full_dim += b.dim();
        }
        let mut order: Vec<(f64, usize, usize)> = solutions
            .iter()
            .enumerate()
            .flat_map(|(b, s)| s.energies.iter().enumerate().map(move |(k, &e)| (e, b, k)))
            .collect();
        // stable: equal energies keep block order
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let n = order.len();
        let mut coefficients = Mat::<f64>::zeros(full_dim, n);
        let mut energies = Vec::with_capacity(n);
        let mut block_of = Vec::with_capacity(n);
        for (col, &(e, b, k)) in order.iter().enumerate() {
            energies.push(e);
            block_of.push(b);
            let src = solutions[b].vectors.col(k);
            let off = offsets[b];
            for i in 0..src.nrows() {
                coefficients[(off + i, col)] = src[i];
            }
        }
        let mut es = Self {
            blocks,
            offsets,
            energies,
            coefficients,
            transness: Vec::new(),
            parity: Vec::new(),
            block_of,
            edge_weight: Vec::new(),
        };
        es.transness = (0..n).map(|k| es.trans_character(k)).collect();
        es.parity = (0..n).map(|k| es.parity_label(k)).collect();
        es.edge_weight = (0..n).map(|k| es.edge_weight_of(k)).collect();
        es
    }

    fn report_convergence(&self, cutoff: f64) {
        let worst = self.edge_weight.iter().cloned().fold(0.0, f64::max);
        if worst > EDGE_WEIGHT_WARN {
            log::warn!(
                "energy cutoff {cutoff} eV exceeds the converged range of the basis: \
                 max weight on the basis edge is {worst:.2e}"
            );
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn transness(&self) -> &[f64] {
        &self.transness
    }

    /// φ-parity label per state: +1, −1, or 0 when an unsplit solve left a
    /// state without definite parity (exact degeneracy).
    pub fn parity(&self) -> &[i8] {
        &self.parity
    }

    pub fn coefficients(&self) -> MatRef<'_, f64> {
        self.coefficients.as_ref()
    }

    pub fn blocks(&self) -> &[ProductBasis] {
        &self.blocks
    }

    pub fn block_offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn block_of(&self) -> &[usize] {
        &self.block_of
    }

    /// Largest squared weight a state carries on the rotor or oscillator cutoff.
    pub fn edge_weights(&self) -> &[f64] {
        &self.edge_weight
    }

    pub fn primitive_dim(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Coefficients of state `k` restricted to its own block.
    pub fn block_vector(&self, k: usize) -> (ProductBasis, Vec<f64>) {
        let b = self.block_of[k];
        let basis = self.blocks[b];
        let off = self.offsets[b];
        let v = (0..basis.dim()).map(|i| self.coefficients[(off + i, k)]).collect();
        (basis, v)
    }

    /// Trans-ness l_k = ∫ |⟨φ|k⟩|² (1 − cos φ)/2 dφ/2π, evaluated from the
    /// tridiagonal matrix of cos φ in the rotor basis.
    pub fn trans_character(&self, k: usize) -> f64 {
        let (basis, c) = self.block_vector(k);
        trans_character(&basis, &c)
    }

    fn parity_label(&self, k: usize) -> i8 {
        let b = self.blocks[self.block_of[k]];
        if let Some(p) = b.parity() {
            return p.sign();
        }
        let (basis, c) = self.block_vector(k);
        let n_ho = basis.n_ho;
        let mut overlap = 0.0;
        for (i, ci) in c.iter().enumerate() {
            let v = i % n_ho;
            let r = (i / n_ho) % basis.n_rotor();
            let el = i / basis.el_dim();
            let j = basis.index(el, basis.rotor.mirror_index(r).unwrap_or(r), v);
            overlap += ci * c[j];
        }
        if overlap > 0.5 {
            1
        } else if overlap < -0.5 {
            -1
        } else {
            0
        }
    }

    fn edge_weight_of(&self, k: usize) -> f64 {
        let (basis, c) = self.block_vector(k);
        let mut rotor_edge = 0.0;
        let mut ho_edge = 0.0;
        for el in 0..2 {
            for r in 0..basis.n_rotor() {
                for v in 0..basis.n_ho {
                    let w = c[basis.index(el, r, v)].powi(2);
                    if basis.rotor.is_edge(r) {
                        rotor_edge += w;
                    }
                    if v + 1 == basis.n_ho {
                        ho_edge += w;
                    }
                }
            }
        }
        f64::max(rotor_edge, ho_edge)
    }

    /// Index of the lowest-energy state.
    pub fn ground_index(&self) -> Option<usize> {
        (!self.is_empty()).then_some(0)
    }

    /// Keep only the listed states (in the given order, which must be
    /// energy-sorted).
    pub fn subset(&self, keep: &[usize]) -> Result<Self> {
        if keep.windows(2).any(|w| self.energies[w[0]] > self.energies[w[1]]) {
            return Err(Error::invalid("subset", "indices must be energy ordered"));
        }
        if let Some(&bad) = keep.iter().find(|&&k| k >= self.len()) {
            return Err(Error::Dimension(format!("state {bad} out of range {}", self.len())));
        }
        let mut coefficients = Mat::zeros(self.primitive_dim(), keep.len());
        for (col, &k) in keep.iter().enumerate() {
            coefficients.col_mut(col).copy_from(self.coefficients.col(k));
        }
        let pick = |v: &[f64]| keep.iter().map(|&k| v[k]).collect::<Vec<_>>();
        Ok(Self {
            blocks: self.blocks.clone(),
            offsets: self.offsets.clone(),
            energies: pick(&self.energies),
            coefficients,
            transness: pick(&self.transness),
            parity: keep.iter().map(|&k| self.parity[k]).collect(),
            block_of: keep.iter().map(|&k| self.block_of[k]).collect(),
            edge_weight: pick(&self.edge_weight),
        })
    }

    /// States of one parity sector.
    pub fn sector(&self, parity: Parity) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&k| self.parity[k] == parity.sign()).collect();
        self.subset(&keep)
    }

    /// States with ε ≤ `e_max`.
    pub fn truncated(&self, e_max: f64) -> Result<Self> {
        let keep: Vec<usize> = (0..self.len()).filter(|&k| self.energies[k] <= e_max).collect();
        self.subset(&keep)
    }

    /// Rebuild from stored parts (used by the binary reader).
    pub(crate) fn from_parts(
        blocks: Vec<ProductBasis>,
        energies: Vec<f64>,
        coefficients: Mat<f64>,
        block_of: Vec<usize>,
    ) -> Result<Self> {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut full = 0;
        for b in &blocks {
            offsets.push(full);
            full += b.dim();
        }
        if coefficients.nrows() != full || coefficients.ncols() != energies.len() {
            return Err(Error::Dimension("coefficient blob does not match header".into()));
        }
        let n = energies.len();
        let mut es = Self {
            blocks,
            offsets,
            energies,
            coefficients,
            transness: Vec::new(),
            parity: Vec::new(),
            block_of,
            edge_weight: Vec::new(),
        };
        es.transness = (0..n).map(|k| es.trans_character(k)).collect();
        es.parity = (0..n).map(|k| es.parity_label(k)).collect();
        es.edge_weight = (0..n).map(|k| es.edge_weight_of(k)).collect();
        Ok(es)
    }
}

/// l = ⟨c| 1_el ⊗ (1 − cos φ)/2 ⊗ 1_x |c⟩ for a block vector `c`.
pub fn trans_character(basis: &ProductBasis, c: &[f64]) -> f64 {
    let norm: f64 = c.iter().map(|x| x * x).sum();
    let cos = basis.rotor.cos_couplings();
    let mut cos_expect = 0.0;
    for el in 0..2 {
        for &(a, b, w) in &cos {
            for v in 0..basis.n_ho {
                cos_expect += 2.0 * w * c[basis.index(el, a, v)] * c[basis.index(el, b, v)];
            }
        }
    }
    (0.5 * (norm - cos_expect)).clamp(0.0, norm) / norm
}

fn diagonalize_block(h: MatRef<'_, f64>, cutoff: f64) -> Result<BlockSolution> {
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let keep: Vec<usize> = (0..s.nrows()).filter(|&i| s[i] <= cutoff).collect();
    let mut vectors = Mat::<f64>::zeros(h.nrows(), keep.len());
    let mut energies = Vec::with_capacity(keep.len());
    for (col, &i) in keep.iter().enumerate() {
        energies.push(s[i]);
        let src = u.col(i);
        // largest-magnitude coefficient made positive
        let mut pivot = 0;
        for r in 0..src.nrows() {
            if src[r].abs() > src[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if src[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..src.nrows() {
            vectors[(r, col)] = sign * src[r];
        }
    }
    Ok(BlockSolution { energies, vectors })
}

/// Eigenvalues (no vectors) of every block up to `e_max`, merged and sorted,
/// with their parity labels (0 for plane-wave blocks).
pub fn spectrum(params: &ModelParameters, spec: &BasisSpec, e_max: f64) -> Result<Vec<(f64, i8)>> {
    spec.validate()?;
    let mut out = Vec::new();
    for b in spec.blocks() {
        let h = build_hamiltonian(params, &b)?;
        let vals = h
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        drop(h);
        let sign = b.parity().map_or(0, Parity::sign);
        out.extend(vals.into_iter().filter(|&e| e <= e_max).map(|e| (e, sign)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Analytic spectrum of the separable limit (κ = λ = V0 = V1 = 0): every
/// |el, m, v⟩ is an eigenstate with E_el + m²m⁻¹/2 + ω(v + ½).
pub fn separable_spectrum(params: &ModelParameters, spec: &BasisSpec) -> Vec<f64> {
    let mut out = Vec::with_capacity(spec.primitive_dim());
    for b in spec.blocks() {
        for el in 0..2 {
            let origin = if el == 0 { params.e0 } else { params.e1 };
            for r in 0..b.n_rotor() {
                let m = b.rotor.momentum(r) as f64;
                for v in 0..b.n_ho {
                    out.push(origin + 0.5 * params.m_inv * m * m + params.omega * (v as f64 + 0.5));
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

impl RotorBasis {
    pub(crate) fn tag(&self) -> u8 {
        match self {
            RotorBasis::PlaneWave { .. } => 0,
            RotorBasis::Cosine { .. } => 1,
            RotorBasis::Sine { .. } => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8, n_max: usize) -> Option<Self> {
        match tag {
            0 => Some(RotorBasis::PlaneWave { n_max }),
            1 => Some(RotorBasis::Cosine { n_max }),
            2 => Some(RotorBasis::Sine { n_max }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::basis::ParitySectors;

    fn small_spec() -> BasisSpec {
        BasisSpec {
            n_rotor_max: 20,
            n_ho: 12,
            energy_cutoff: 2.0,
            parity_split: true,
            sectors: ParitySectors::Both,
        }
    }

    #[test]
    fn orthonormal_sorted_and_bounded() {
        let es = Eigensystem::solve(&ModelParameters::default(), &small_spec()).unwrap();
        assert!(es.len() > 20);
        assert!(es.energies().windows(2).all(|w| w[0] <= w[1]));
        assert!(es.energies().iter().all(|&e| e <= 2.0));
        let c = es.coefficients();
        let g = c.transpose() * c;
        for i in 0..es.len() {
            for j in 0..es.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - target).abs() < 1e-10);
            }
        }
        assert!(es.transness().iter().all(|&l| (0.0..=1.0).contains(&l)));
        assert!(es.parity().iter().all(|&p| p == 1 || p == -1));
    }

    #[test]
    fn ground_state_is_cis_localized_and_even() {
        let es = Eigensystem::solve(&ModelParameters::default(), &small_spec()).unwrap();
        assert!(es.transness()[0] < 0.05, "l0 = {}", es.transness()[0]);
        assert_eq!(es.parity()[0], 1);
    }

    #[test]
    fn phase_convention_largest_component_positive() {
        let es = Eigensystem::solve(&ModelParameters::default(), &small_spec()).unwrap();
        for k in 0..es.len() {
            let (_, v) = es.block_vector(k);
            let big = v
                .iter()
                .cloned()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big > 0.0);
        }
    }

    #[test]
    fn split_and_unsplit_spectra_agree() {
        let p = ModelParameters::default();
        let split = Eigensystem::solve(&p, &small_spec()).unwrap();
        let unsplit = Eigensystem::solve(
            &p,
            &BasisSpec {
                parity_split: false,
                ..small_spec()
            },
        )
        .unwrap();
        assert_eq!(split.len(), unsplit.len());
        for (a, b) in split.energies().iter().zip(unsplit.energies()) {
            assert!((a - b).abs() < 1e-10);
        }
        // nondegenerate low states get the same labels
        for k in 0..10 {
            assert_eq!(split.parity()[k], unsplit.parity()[k], "state {k}");
            assert!((split.transness()[k] - unsplit.transness()[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn separable_limit_matches_ladders() {
        let p = ModelParameters::default().separable();
        let spec = BasisSpec {
            energy_cutoff: 1e3,
            ..small_spec()
        };
        let es = Eigensystem::solve(&p, &spec).unwrap();
        let exact = separable_spectrum(&p, &spec);
        for (a, b) in es.energies().iter().zip(&exact).take(200) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn uniform_density_has_half_transness() {
        // a single pure plane wave has a flat |ψ(φ)|²
        let b = ProductBasis::new(RotorBasis::PlaneWave { n_max: 3 }, 2);
        let mut c = vec![0.0; b.dim()];
        c[b.index(1, 5, 0)] = 1.0;
        assert!((trans_character(&b, &c) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn density_peaked_at_pi_has_unit_transness() {
        // Fejér-type packet Σ_m (−1)^m (1 − |m|/(M+1)) e^{imφ} concentrates at φ = π
        let n_max = 60;
        let b = ProductBasis::new(RotorBasis::PlaneWave { n_max }, 1);
        let mut c = vec![0.0; b.dim()];
        for r in 0..b.n_rotor() {
            let m = b.rotor.momentum(r);
            let w = 1.0 - m.unsigned_abs() as f64 / (n_max as f64 + 1.0);
            c[b.index(0, r, 0)] = if m % 2 == 0 { w } else { -w };
        }
        let l = trans_character(&b, &c);
        assert!(l > 0.99, "{l}");
    }

    #[test]
    fn eigenvalue_only_path_matches() {
        let p = ModelParameters::default();
        let spec = small_spec();
        let es = Eigensystem::solve(&p, &spec).unwrap();
        let sp = spectrum(&p, &spec, spec.energy_cutoff).unwrap();
        assert_eq!(sp.len(), es.len());
        for (k, (e, par)) in sp.iter().enumerate() {
            assert!((e - es.energies()[k]).abs() < 1e-10);
            let _ = par;
        }
    }

    #[test]
    fn sector_and_subset() {
        let es = Eigensystem::solve(&ModelParameters::default(), &small_spec()).unwrap();
        let even = es.sector(Parity::Even).unwrap();
        let odd = es.sector(Parity::Odd).unwrap();
        assert_eq!(even.len() + odd.len(), es.len());
        assert!(even.parity().iter().all(|&p| p == 1));
        let low = es.truncated(1.0).unwrap();
        assert!(low.energies().iter().all(|&e| e <= 1.0));
        assert!(es.subset(&[3, 1]).is_err());
    }
}

// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Level unfolding and nearest-neighbour spacing statistics.
//!
//! Levels are unfolded with a local mean spacing taken over a window of 2k+1
//! neighbouring gaps,
//!
//! ```text
//! ε̃_{i+1} = ε̃_i + (2k+1)(ε_{i+1} − ε_i)/(ε_{j₂+1} − ε_{j₁})
//! j₁ = max(1, i−k),  j₂ = min(n−1, i+k)
//! ```
//!
//! (1-based), with ε̃₁ = 0.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Local window half-width used unless stated otherwise.
pub const DEFAULT_LOCAL_WINDOW: usize = 2;

pub const NNSD_REPORT_VERSION: u32 = 1;

/// Unfold a nondecreasing level sequence.
pub fn unfold(energies: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::invalid("k", "local window must be >= 1"));
    }
    let n = energies.len();
    if n < 2 * k + 2 {
        return Err(Error::InsufficientLevels {
            have: n,
            need: 2 * k + 2,
        });
    }
    if let Some(w) = energies.windows(2).find(|w| !(w[1] >= w[0])) {
        return Err(Error::invalid(
            "energies",
            format!("must be nondecreasing, found {} after {}", w[1], w[0]),
        ));
    }
    let degenerate = energies.windows(2).filter(|w| w[1] == w[0]).count();
    if degenerate > 0 {
        log::warn!("{degenerate} exactly degenerate level pair(s); their spacings are zero");
    }
    let width = (2 * k + 1) as f64;
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    // 0-based: gap i runs from level i to i+1, window spans levels j1..=j2+1
    for i in 0..n - 1 {
        let j1 = i.saturating_sub(k);
        let j2 = (i + k).min(n - 2);
        let span = energies[j2 + 1] - energies[j1];
        if !(span > 0.0) {
            return Err(Error::invalid(
                "energies",
                format!("zero local spread around level {}", i + 1),
            ));
        }
        let last = out[i];
        out.push(last + width * (energies[i + 1] - energies[i]) / span);
    }
    Ok(out)
}

/// Unfolded spacings of one energy band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingSample {
    pub band: (f64, f64),
    pub k: usize,
    pub unfolded: Vec<f64>,
    pub spacings: Vec<f64>,
    pub mean_spacing: f64,
}

impl SpacingSample {
    /// Unfold the levels of `levels` that fall in `[band.0, band.1)`.
    pub fn from_band(levels: &[f64], band: (f64, f64), k: usize) -> Result<Self> {
        let (lo, hi) = band;
        if !(hi > lo) {
            return Err(Error::invalid("band", format!("empty interval [{lo}, {hi})")));
        }
        let inside: Vec<f64> = levels.iter().copied().filter(|&e| e >= lo && e < hi).collect();
        if inside.is_empty() {
            return Err(Error::EmptyBand { lo, hi });
        }
        let unfolded = unfold(&inside, k)?;
        let spacings: Vec<f64> = unfolded.windows(2).map(|w| w[1] - w[0]).collect();
        let mean_spacing = spacings.iter().sum::<f64>() / spacings.len() as f64;
        Ok(Self {
            band,
            k,
            unfolded,
            spacings,
            mean_spacing,
        })
    }

    pub fn levels(&self) -> usize {
        self.unfolded.len()
    }

    /// Spacings in units of the mean spacing.
    pub fn normalized(&self) -> Vec<f64> {
        self.spacings.iter().map(|s| s / self.mean_spacing).collect()
    }
}

/// Density histogram on equal bins starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub width: f64,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.density.len()).map(|i| (i as f64 + 0.5) * self.width)
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width
    }
}

/// Normalized histogram of `s` over `[0, max s]` with `bins` bins.
pub fn nnsd(s: &[f64], bins: usize) -> Result<Histogram> {
    if s.is_empty() {
        return Err(Error::invalid("spacings", "empty sample"));
    }
    if bins == 0 {
        return Err(Error::invalid("bins", "must be >= 1"));
    }
    if s.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::invalid("spacings", "must be finite and >= 0"));
    }
    let top = s.iter().copied().fold(0.0, f64::max);
    let bins = if s.len() == 1 || top == 0.0 { 1 } else { bins };
    let width = if top > 0.0 { top / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &x in s {
        let b = ((x / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let norm = 1.0 / (s.len() as f64 * width);
    Ok(Histogram {
        width,
        density: counts.into_iter().map(|c| c as f64 * norm).collect(),
    })
}

/// Wigner surmise (πS/2D²) e^{−πS²/4D²}.
pub fn wigner_pdf(s: f64, d: f64) -> f64 {
    PI * s / (2.0 * d * d) * (-PI * s * s / (4.0 * d * d)).exp()
}

pub fn wigner_cdf(s: f64, d: f64) -> f64 {
    -(-PI * s * s / (4.0 * d * d)).exp_m1()
}

/// Poisson e^{−S/D}/D.
pub fn poisson_pdf(s: f64, d: f64) -> f64 {
    (-s / d).exp() / d
}

pub fn poisson_cdf(s: f64, d: f64) -> f64 {
    -(-s / d).exp_m1()
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `sample` and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter().enumerate().fold(0.0, |acc, (i, &v)| {
        let f = cdf(v);
        acc.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

/// Which φ-parity levels enter the statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSector {
    #[default]
    Even,
    Odd,
    /// Both sectors interleaved.
    Merged,
}

impl SpectrumSector {
    /// Energies of the selected sector from a `(energy, parity)` list.
    pub fn select(self, spectrum: &[(f64, i8)]) -> Vec<f64> {
        let mut out: Vec<f64> = spectrum
            .iter()
            .filter(|(_, p)| match self {
                SpectrumSector::Even => *p >= 0,
                SpectrumSector::Odd => *p <= 0,
                SpectrumSector::Merged => true,
            })
            .map(|(e, _)| *e)
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStats {
    pub e_min: f64,
    pub e_max: f64,
    pub levels: usize,
    /// mean unfolded spacing (dimensionless)
    pub mean_spacing: f64,
    pub ks_wigner: f64,
    pub ks_poisson: f64,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnsdReport {
    pub version: u32,
    pub k: usize,
    pub sector: SpectrumSector,
    pub bands: Vec<BandStats>,
}

pub fn band_stats(sample: &SpacingSample) -> BandStats {
    let s = sample.normalized();
    let ks_wigner = ks_distance(&s, |x| wigner_cdf(x, 1.0));
    let ks_poisson = ks_distance(&s, |x| poisson_cdf(x, 1.0));
    let verdict = if ks_wigner < ks_poisson {
        "closer to Wigner"
    } else {
        "closer to Poisson"
    };
    BandStats {
        e_min: sample.band.0,
        e_max: sample.band.1,
        levels: sample.levels(),
        mean_spacing: sample.mean_spacing,
        ks_wigner,
        ks_poisson,
        verdict: verdict.to_string(),
    }
}

/// Statistics for each band of an already selected level sequence.
pub fn band_compare(levels: &[f64], bands: &[(f64, f64)], k: usize, sector: SpectrumSector) -> Result<NnsdReport> {
    let bands = bands
        .iter()
        .map(|&b| SpacingSample::from_band(levels, b, k).map(|s| band_stats(&s)))
        .collect::<Result<_>>()?;
    Ok(NnsdReport {
        version: NNSD_REPORT_VERSION,
        k,
        sector,
        bands,
    })
}

/// `s_over_d,density,wigner,poisson` at bin centres.
pub fn write_nnsd_csv<W: Write>(sample: &SpacingSample, bins: usize, mut w: W) -> Result<()> {
    let h = nnsd(&sample.normalized(), bins)?;
    writeln!(
        w,
        "# isoyield nnsd v1 band={}:{} k={} levels={}",
        sample.band.0,
        sample.band.1,
        sample.k,
        sample.levels()
    )?;
    writeln!(w, "s_over_d,density,wigner,poisson")?;
    for (x, d) in h.centers().zip(&h.density) {
        writeln!(w, "{x:.6},{d:.6},{:.6},{:.6}", wigner_pdf(x, 1.0), poisson_pdf(x, 1.0))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn uniform_ladder_unfolds_to_unit_spacing() {
        for k in 1..5 {
            let e: Vec<f64> = (0..60).map(|i| 0.37 * i as f64).collect();
            let u = unfold(&e, k).unwrap();
            assert_eq!(u[0], 0.0);
            for i in k..e.len() - 1 - k {
                assert!((u[i + 1] - u[i] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn too_few_levels() {
        let e = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            unfold(&e, 2),
            Err(Error::InsufficientLevels { have: 5, need: 6 })
        ));
        assert!(unfold(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], 2).is_ok());
        assert!(unfold(&e, 0).is_err());
        assert!(unfold(&[0.0, 2.0, 1.0, 3.0], 1).is_err());
    }

    #[test]
    fn power_of_two_scaling_is_bit_exact() {
        let e: Vec<f64> = (0..40)
            .map(|i: i32| (i as f64).powf(1.3) + 0.1 * (i as f64).sin())
            .collect();
        let a = unfold(&e, 2).unwrap();
        let b = unfold(&e.iter().map(|x| x * 8.0).collect::<Vec<_>>(), 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_normalization() {
        let s = [0.1, 0.5, 0.7, 1.2, 2.5, 0.0, 0.9];
        let h = nnsd(&s, 5).unwrap();
        assert!((h.integral() - 1.0).abs() < 1e-14);
        assert!(h.density.iter().all(|d| *d >= 0.0));
        let one = nnsd(&[1.3], 20).unwrap();
        assert_eq!(one.density.len(), 1);
        assert!((one.integral() - 1.0).abs() < 1e-15);
        assert!(nnsd(&[], 4).is_err());
    }

    #[test]
    fn model_pdfs_are_normalized() {
        for d in [0.5, 1.0, 3.0] {
            let w = simpson(|s| wigner_pdf(s, d), 0.0, 20.0 * d, 200_000);
            let p = simpson(|s| poisson_pdf(s, d), 0.0, 60.0 * d, 600_000);
            assert!((w - 1.0).abs() < 1e-10, "{w}");
            assert!((p - 1.0).abs() < 1e-10, "{p}");
        }
    }

    #[test]
    fn wigner_mean_and_mode() {
        let d = 1.7;
        assert_eq!(wigner_pdf(0.0, d), 0.0);
        let mean = simpson(|s| s * wigner_pdf(s, d), 0.0, 20.0 * d, 200_000);
        assert!((mean - d).abs() < 1e-10);
        let mode = d * (2.0 / PI).sqrt();
        let h = 1e-6;
        let slope = (wigner_pdf(mode + h, d) - wigner_pdf(mode - h, d)) / (2.0 * h);
        assert!(slope.abs() < 1e-8);
        assert!(wigner_pdf(mode, d) > wigner_pdf(mode * 0.9, d));
        assert!(wigner_pdf(mode, d) > wigner_pdf(mode * 1.1, d));
    }

    #[test]
    fn cdfs_match_pdfs() {
        for s in [0.1, 0.8, 2.0] {
            let w = simpson(|x| wigner_pdf(x, 1.0), 0.0, s, 20_000);
            let p = simpson(|x| poisson_pdf(x, 1.0), 0.0, s, 20_000);
            assert!((w - wigner_cdf(s, 1.0)).abs() < 1e-12);
            assert!((p - poisson_cdf(s, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn ks_distance_of_exact_quantiles() {
        let n = 1000;
        let q: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let x: Vec<f64> = q.iter().map(|p| -(1.0 - p).ln()).collect();
        let d = ks_distance(&x, |s| poisson_cdf(s, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn wigner_samples_are_recognized() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let trials = 400;
        let mut hits = 0;
        for _ in 0..trials {
            // inverse of the Wigner CDF
            let s: Vec<f64> = (0..1240)
                .map(|_| {
                    let u: f64 = rng.random();
                    (-4.0 / PI * (1.0 - u).ln()).sqrt()
                })
                .collect();
            if ks_distance(&s, |x| wigner_cdf(x, 1.0)) < ks_distance(&s, |x| poisson_cdf(x, 1.0)) {
                hits += 1;
            }
        }
        assert!(hits as f64 / trials as f64 > 0.99);
    }

    #[test]
    fn band_sample_counts_levels() {
        let levels: Vec<f64> = (0..100).map(|i| 0.01 * i as f64).collect();
        let s = SpacingSample::from_band(&levels, (0.2, 0.5), 2).unwrap();
        assert_eq!(s.levels(), 30);
        assert_eq!(s.spacings.len(), 29);
        assert!(matches!(
            SpacingSample::from_band(&levels, (5.0, 6.0), 2),
            Err(Error::EmptyBand { .. })
        ));
    }

    #[test]
    fn sector_selection() {
        let sp = [(0.1, 1), (0.2, -1), (0.3, 0), (0.4, 1)];
        assert_eq!(SpectrumSector::Even.select(&sp), vec![0.1, 0.3, 0.4]);
        assert_eq!(SpectrumSector::Odd.select(&sp), vec![0.2, 0.3]);
        assert_eq!(SpectrumSector::Merged.select(&sp).len(), 4);
    }

    #[test]
    fn report_round_trips_through_json() {
        let levels: Vec<f64> = (0..50).map(|i| (i as f64).sqrt()).collect();
        let r = band_compare(&levels, &[(0.0, 3.0), (3.0, 8.0)], 2, SpectrumSector::Even).unwrap();
        let back: NnsdReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(r, back);
        let mut buf = Vec::new();
        write_nnsd_csv(&SpacingSample::from_band(&levels, (0.0, 8.0), 2).unwrap(), 10, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 12);
    }

    proptest! {
        #[test]
        fn affine_invariance(
            gaps in proptest::collection::vec(1e-3f64..1.0, 10..80),
            a in 1e-3f64..1e3,
            b in -10.0f64..10.0,
        ) {
            let mut e = vec![0.0];
            for g in &gaps {
                let last = *e.last().unwrap();
                e.push(last + g);
            }
            let u = unfold(&e, 2).unwrap();
            let v = unfold(&e.iter().map(|x| a * x + b).collect::<Vec<_>>(), 2).unwrap();
            for (x, y) in u.iter().zip(&v) {
                prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn spacings_nonnegative_and_mean(gaps in proptest::collection::vec(0.0f64..1.0, 10..60)) {
            let mut e = vec![1.0];
            for g in &gaps {
                let last = *e.last().unwrap();
                e.push(last + g + 1e-6);
            }
            let s = SpacingSample::from_band(&e, (0.0, 1e9), 1).unwrap();
            prop_assert!(s.spacings.iter().all(|x| *x >= 0.0));
            prop_assert_eq!(s.spacings.len(), s.levels() - 1);
            let mean = s.spacings.iter().sum::<f64>() / s.spacings.len() as f64;
            prop_assert!((mean - s.mean_spacing).abs() < 1e-14);
        }

        #[test]
        fn random_ladder_in_unit_histogram(xs in proptest::collection::vec(0.0f64..5.0, 1..200), bins in 1usize..40) {
            let h = nnsd(&xs, bins).unwrap();
            prop_assert!((h.integral() - 1.0).abs() < 1e-12);
        }
    }
}

//! Monte Carlo ground truth.
//!
//! Each realization draws `H̃` from the GUE (and, for random profiles, a fresh
//! `W`), assembles `H = W·H̃·W + D`, diagonalizes it and reduces the result to
//! a small per-realization summary. Summaries are combined in realization
//! order, so the output does not depend on the number of worker threads.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, EigenSystem, HermitianMatrix};
use crate::model::{sample_gaussian_w_profile, DiagonalProfile, GaussianWParams};
use crate::rng;
use crate::table::{Cell, Table};

/// GUE matrix drawn from `rng`: diagonal `N(0, 1/n)`, off-diagonal real and
/// imaginary parts `N(0, 1/(2n))`. The semicircle then lives on `[-2, 2]`.
pub fn sample_gue_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HermitianMatrix> {
    if n < 2 {
        return Err(Error::Argument(format!("GUE size must be >= 2, got {n}")));
    }
    let diag_sd = (1.0 / n as f64).sqrt();
    let off_sd = (0.5 / n as f64).sqrt();
    let mut h = HermitianMatrix::zeros(n);
    for j in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        h.set_pair(j, j, Complex64::new(diag_sd * x, 0.0));
        for i in j + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            h.set_pair(i, j, Complex64::new(off_sd * re, off_sd * im));
        }
    }
    Ok(h)
}

/// GUE matrix determined by `seed`.
pub fn sample_gue(n: usize, seed: u64) -> Result<HermitianMatrix> {
    sample_gue_with(n, &mut rng::stream(seed, rng::STREAM_MATRIX))
}

/// `H = W·H̃·W + D`.
pub fn assemble(h_tilde: &HermitianMatrix, profile: &DiagonalProfile) -> Result<HermitianMatrix> {
    let n = h_tilde.n();
    if profile.n() != n {
        return Err(Error::Dimension {
            expected: n,
            found: profile.n(),
        });
    }
    let mut h = h_tilde.clone();
    let w = profile.w();
    let d = profile.d();
    let data = h.as_mut_slice();
    for j in 0..n {
        for i in 0..n {
            data[i + j * n] *= w[i] * w[j];
        }
        data[j + j * n] += d[j];
    }
    Ok(h)
}

/// Which eigenstates count as "at energy E".
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnergyWindow {
    /// All states with `|E_α - center| <= half_width`.
    HalfWidth { center: f64, half_width: f64 },
    /// The `count` states closest to `center`.
    NearestK { center: f64, count: usize },
}

impl EnergyWindow {
    /// Nearest-K window with `K = max(8, n/20)`.
    pub fn default_for(center: f64, n: usize) -> Self {
        EnergyWindow::NearestK {
            center,
            count: (n / 20).max(8),
        }
    }

    pub fn center(&self) -> f64 {
        match *self {
            EnergyWindow::HalfWidth { center, .. } | EnergyWindow::NearestK { center, .. } => center,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EnergyWindow::HalfWidth { half_width, center } if !(half_width > 0.0) || !center.is_finite() => Err(
                Error::Argument(format!("window half-width must be positive, got {half_width}")),
            ),
            EnergyWindow::NearestK { count: 0, .. } => {
                Err(Error::Argument("window count must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    /// Inclusive index block of ascending `values` inside the window, or `None`
    /// when no state qualifies.
    pub fn select(&self, values: &[f64]) -> Option<(usize, usize)> {
        if values.is_empty() {
            return None;
        }
        match *self {
            EnergyWindow::HalfWidth { center, half_width } => {
                let lo = values.partition_point(|&e| e < center - half_width);
                let hi = values.partition_point(|&e| e <= center + half_width);
                (hi > lo).then(|| (lo, hi - 1))
            }
            EnergyWindow::NearestK { center, count } => {
                let k = count.min(values.len());
                // Grow a contiguous block from the closest eigenvalue.
                let p = values.partition_point(|&e| e < center);
                let (mut lo, mut hi) = (p, p); // half-open [lo, hi)
                while hi - lo < k {
                    let take_left = if lo == 0 {
                        false
                    } else if hi == values.len() {
                        true
                    } else {
                        center - values[lo - 1] <= values[hi] - center
                    };
                    if take_left {
                        lo -= 1;
                    } else {
                        hi += 1;
                    }
                }
                Some((lo, hi - 1))
            }
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Number of independent realizations behind the estimate.
    pub n_samples: usize,
}

impl MCEstimate {
    /// Mean and standard error of the mean of independent samples.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Argument("no samples".into()));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std_error = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            value: mean,
            std_error,
            n_samples: xs.len(),
        })
    }

    /// Ratio estimator `Σ s_r / Σ c_r` over realizations `r`, with the
    /// linearized (cluster) standard error. This weights every window state
    /// equally even when window occupancy varies between realizations.
    pub fn from_ratio(sums: &[f64], counts: &[f64]) -> Result<Self> {
        if sums.len() != counts.len() {
            return Err(Error::Dimension {
                expected: sums.len(),
                found: counts.len(),
            });
        }
        let r = sums.len();
        let total_count: f64 = counts.iter().sum();
        if r == 0 || total_count <= 0.0 {
            return Err(Error::Argument("ratio estimator needs a positive count".into()));
        }
        let value = sums.iter().sum::<f64>() / total_count;
        let std_error = if r > 1 {
            let rf = r as f64;
            let mean_count = total_count / rf;
            let ss: f64 = sums
                .iter()
                .zip(counts)
                .map(|(s, c)| (s - value * c).powi(2))
                .sum();
            (ss / (rf * (rf - 1.0))).sqrt() / mean_count
        } else {
            0.0
        };
        Ok(Self {
            value,
            std_error,
            n_samples: r,
        })
    }

    /// `(value - reference) / std_error`; infinite when the error is zero and
    /// the values differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.value - reference;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Uniform histogram bins, optionally dropping those that touch `|E| < e_min`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinGrid {
    edges: Vec<f64>,
    keep: Vec<bool>,
}

impl BinGrid {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Argument(format!(
                "bin grid needs lo < hi and at least one bin, got [{lo}, {hi}] with {bins}"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|k| lo + width * k as f64).collect();
        edges.push(hi);
        Ok(Self {
            keep: vec![true; bins],
            edges,
        })
    }

    /// Excludes bins overlapping the open band `(-e_min, e_min)`. Edges within
    /// rounding of `±e_min` count as touching, not overlapping.
    pub fn excluding_band(mut self, e_min: f64) -> Self {
        if !(e_min > 0.0) {
            return self;
        }
        for (k, keep) in self.keep.iter_mut().enumerate() {
            let (a, b) = (self.edges[k], self.edges[k + 1]);
            let eps = 1e-9 * (b - a);
            if b > -e_min + eps && a < e_min - eps {
                *keep = false;
            }
        }
        self
    }

    pub fn bins(&self) -> usize {
        self.keep.len()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    fn bin_of(&self, e: f64) -> Option<usize> {
        let n = self.bins();
        if !(e >= self.edges[0] && e <= self.edges[n]) {
            return None;
        }
        let k = self.edges.partition_point(|&x| x <= e).saturating_sub(1);
        Some(k.min(n - 1))
    }

    fn counts(&self, values: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.bins()];
        for &e in values {
            if let Some(k) = self.bin_of(e) {
                c[k] += 1.0;
            }
        }
        c
    }
}

/// One histogram bin of the density of states.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DosBin {
    pub center: f64,
    pub width: f64,
    pub rho: f64,
    pub std_error: f64,
}

fn dos_from_counts(grid: &BinGrid, per_real: &[(Vec<f64>, usize)]) -> Result<Vec<DosBin>> {
    let mut out = Vec::new();
    for k in 0..grid.bins() {
        if !grid.keep[k] {
            continue;
        }
        let width = grid.edges[k + 1] - grid.edges[k];
        let samples: Vec<f64> = per_real
            .iter()
            .map(|(c, n)| c[k] / (*n as f64 * width))
            .collect();
        let est = MCEstimate::from_samples(&samples)?;
        out.push(DosBin {
            center: 0.5 * (grid.edges[k] + grid.edges[k + 1]),
            width,
            rho: est.value,
            std_error: est.std_error,
        });
    }
    Ok(out)
}

/// Histogram estimate of `ρ(E)`: `count / (realizations · N · width)`.
pub fn estimate_dos(eigenvalue_batches: &[Vec<f64>], grid: &BinGrid) -> Result<Vec<DosBin>> {
    if eigenvalue_batches.is_empty() {
        return Err(Error::Argument("no eigenvalue batches".into()));
    }
    let per_real: Vec<(Vec<f64>, usize)> = eigenvalue_batches
        .iter()
        .map(|b| (grid.counts(b), b.len()))
        .collect();
    dos_from_counts(grid, &per_real)
}

/// Per-realization sums over window states.
#[derive(Clone, Debug, PartialEq)]
struct WindowSums {
    states: usize,
    energy_sum: f64,
    /// `per_site[j][n] = Σ_α |ψ_n^α|^{2 q_j}`.
    per_site: Vec<Vec<f64>>,
    /// `totals[j] = Σ_α Σ_n |ψ_n^α|^{2 q_j}`.
    totals: Vec<f64>,
}

/// Window sums of one realization; a realization without window states
/// contributes zeros.
fn window_sums(es: &EigenSystem, window: &EnergyWindow, q_list: &[u32]) -> Result<WindowSums> {
    let n = es.n;
    let mut per_site = vec![vec![0.0; n]; q_list.len()];
    let mut totals = vec![0.0; q_list.len()];
    let mut energy_sum = 0.0;
    let Some((lo, hi)) = window.select(&es.values) else {
        return Ok(WindowSums {
            states: 0,
            energy_sum,
            per_site,
            totals,
        });
    };
    for alpha in lo..=hi {
        let v = es.vector(alpha).ok_or_else(|| {
            Error::Argument(format!("eigenvector {alpha} was not computed"))
        })?;
        energy_sum += es.values[alpha];
        for (j, &q) in q_list.iter().enumerate() {
            let mut total = 0.0;
            for (acc, z) in per_site[j].iter_mut().zip(v) {
                let p = z.norm_sqr().powi(q as i32);
                *acc += p;
                total += p;
            }
            totals[j] += total;
        }
    }
    Ok(WindowSums {
        states: hi - lo + 1,
        energy_sum,
        per_site,
        totals,
    })
}

/// Per-site and total moment estimates for one `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentEstimate {
    pub q: u32,
    /// `⟨|ψ_n|^{2q}⟩` over window states, site `n` at index `n - 1`.
    pub per_site: Vec<MCEstimate>,
    /// `⟨Σ_n |ψ_n|^{2q}⟩` over window states.
    pub total: MCEstimate,
}

fn moments_from_sums(
    sums: &[WindowSums],
    q_list: &[u32],
    window: &EnergyWindow,
) -> Result<Vec<MomentEstimate>> {
    if sums.iter().all(|s| s.states == 0) {
        return Err(Error::EmptyWindow {
            center: window.center(),
        });
    }
    let counts: Vec<f64> = sums.iter().map(|s| s.states as f64).collect();
    let n = sums[0].per_site.first().map_or(0, Vec::len);
    q_list
        .iter()
        .enumerate()
        .map(|(j, &q)| {
            let totals: Vec<f64> = sums.iter().map(|s| s.totals[j]).collect();
            let per_site = (0..n)
                .map(|site| {
                    let col: Vec<f64> = sums.iter().map(|s| s.per_site[j][site]).collect();
                    MCEstimate::from_ratio(&col, &counts)
                })
                .collect::<Result<_>>()?;
            Ok(MomentEstimate {
                q,
                per_site,
                total: MCEstimate::from_ratio(&totals, &counts)?,
            })
        })
        .collect()
}

/// Eigenvector moments of the window states, pooled over realizations.
///
/// Every [`EigenSystem`] must contain the eigenvectors of its window states.
/// Realizations without window states are allowed; an empty window across
/// all of them is an error.
pub fn estimate_moments(
    eigen_systems: &[EigenSystem],
    window: &EnergyWindow,
    q: u32,
) -> Result<MomentEstimate> {
    if q == 0 {
        return Err(Error::Argument("q must be >= 1".into()));
    }
    if eigen_systems.is_empty() {
        return Err(Error::Argument("no eigen systems".into()));
    }
    window.validate()?;
    let sums = eigen_systems
        .iter()
        .map(|es| window_sums(es, window, &[q]))
        .collect::<Result<Vec<_>>>()?;
    Ok(moments_from_sums(&sums, &[q], window)?.remove(0))
}

/// Where each realization's profile comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSource {
    /// The same profile in every realization.
    Fixed(DiagonalProfile),
    /// Fresh `w_i ~ N(0, sigma^2)`, `d_i = 0` per realization.
    GaussianW { n: usize, sigma: f64 },
}

impl ProfileSource {
    pub fn n(&self) -> usize {
        match self {
            ProfileSource::Fixed(p) => p.n(),
            ProfileSource::GaussianW { n, .. } => *n,
        }
    }

    /// Profile of the realization with seed `seed`.
    pub fn profile(&self, seed: u64) -> Result<DiagonalProfile> {
        match self {
            ProfileSource::Fixed(p) => Ok(p.clone()),
            ProfileSource::GaussianW { n, sigma } => {
                sample_gaussian_w_profile(*n, &GaussianWParams::new(*sigma, seed)?)
            }
        }
    }
}

/// Settings for [`run_ensemble`].
#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub source: ProfileSource,
    pub realizations: usize,
    /// Moment window; ignored when `q_list` is empty.
    pub window: EnergyWindow,
    pub q_list: Vec<u32>,
    pub grid: Option<BinGrid>,
    pub base_seed: u64,
}

/// Aggregated Monte Carlo output.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleReport {
    pub n: usize,
    pub realizations: usize,
    pub dos: Option<Vec<DosBin>>,
    pub moments: Vec<MomentEstimate>,
    /// Mean window-state count per realization.
    pub mean_window_states: f64,
    /// Mean energy of all window states.
    pub mean_window_energy: f64,
}

struct RealizationSummary {
    n: usize,
    counts: Option<Vec<f64>>,
    window: Option<WindowSums>,
}

/// Draws and diagonalizes realization `index`.
fn run_realization(spec: &EnsembleSpec, index: usize) -> Result<RealizationSummary> {
    let seed = rng::realization_seed(spec.base_seed, index as u64);
    let profile = spec.source.profile(seed)?;
    let h = assemble(&sample_gue(profile.n(), seed)?, &profile)?;
    let (values, window) = if spec.q_list.is_empty() {
        (linalg::eigenvalues(&h)?, None)
    } else {
        let es = linalg::eig_hermitian_select(&h, |vals| Ok(spec.window.select(vals)))?;
        let sums = window_sums(&es, &spec.window, &spec.q_list)?;
        (es.values, Some(sums))
    };
    Ok(RealizationSummary {
        n: values.len(),
        counts: spec.grid.as_ref().map(|g| g.counts(&values)),
        window,
    })
}

/// Runs `spec.realizations` independent realizations in parallel and combines
/// them in index order.
pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleReport> {
    if spec.realizations == 0 {
        return Err(Error::Argument("realizations must be >= 1".into()));
    }
    if spec.q_list.iter().any(|&q| q == 0) {
        return Err(Error::Argument("q values must be >= 1".into()));
    }
    spec.window.validate()?;
    let summaries = (0..spec.realizations)
        .into_par_iter()
        .map(|r| run_realization(spec, r))
        .collect::<Result<Vec<_>>>()?;

    let dos = match &spec.grid {
        Some(grid) => {
            let per_real: Vec<(Vec<f64>, usize)> = summaries
                .iter()
                .map(|s| (s.counts.clone().expect("grid present"), s.n))
                .collect();
            Some(dos_from_counts(grid, &per_real)?)
        }
        None => None,
    };
    let (moments, mean_window_states, mean_window_energy) = if spec.q_list.is_empty() {
        (Vec::new(), 0.0, f64::NAN)
    } else {
        let sums: Vec<WindowSums> = summaries
            .into_iter()
            .map(|s| s.window.expect("window sums present"))
            .collect();
        let states: usize = sums.iter().map(|s| s.states).sum();
        let energy: f64 = sums.iter().map(|s| s.energy_sum).sum();
        // `moments_from_sums` has already rejected states == 0.
        (
            moments_from_sums(&sums, &spec.q_list, &spec.window)?,
            states as f64 / spec.realizations as f64,
            energy / states as f64,
        )
    };
    Ok(EnsembleReport {
        n: spec.source.n(),
        realizations: spec.realizations,
        dos,
        moments,
        mean_window_states,
        mean_window_energy,
    })
}

impl EnsembleReport {
    pub fn moment(&self, q: u32) -> Option<&MomentEstimate> {
        self.moments.iter().find(|m| m.q == q)
    }

    /// `E,rho,stderr`.
    pub fn dos_table(&self) -> Option<Table> {
        self.dos.as_ref().map(|bins| {
            let mut t = Table::new(["E", "rho", "stderr"]);
            for b in bins {
                t.push(vec![b.center.into(), b.rho.into(), b.std_error.into()]);
            }
            t
        })
    }

    /// `i,Iq,stderr` for one `q`.
    pub fn moment_table(&self, q: u32) -> Option<Table> {
        self.moment(q).map(|m| {
            let mut t = Table::new(["i", "Iq", "stderr"]);
            for (i, e) in m.per_site.iter().enumerate() {
                t.push(vec![Cell::from(i + 1), e.value.into(), e.std_error.into()]);
            }
            t
        })
    }

    /// `q,total,stderr,N,realizations`.
    pub fn totals_table(&self) -> Table {
        let mut t = Table::new(["q", "total", "stderr", "N", "realizations"]);
        for m in &self.moments {
            t.push(vec![
                m.q.into(),
                m.total.value.into(),
                m.total.std_error.into(),
                self.n.into(),
                self.realizations.into(),
            ]);
        }
        t
    }

    /// Writes `dos.csv`, `moments_q{q}.csv` and `moments_total.csv` into `dir`.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        if let Some(t) = self.dos_table() {
            let p = dir.join("dos.csv");
            t.write_path(&p)?;
            written.push(p);
        }
        for m in &self.moments {
            let p = dir.join(format!("moments_q{}.csv", m.q));
            self.moment_table(m.q).expect("moment present").write_path(&p)?;
            written.push(p);
        }
        if !self.moments.is_empty() {
            let p = dir.join("moments_total.csv");
            self.totals_table().write_path(&p)?;
            written.push(p);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gue_is_hermitian_with_expected_diagonal_scale() {
        let n = 512;
        let h = sample_gue(n, 5).unwrap();
        assert_eq!(h.hermiticity_defect(), 0.0);
        let msq = (0..n).map(|i| h.get(i, i).re.powi(2)).sum::<f64>() / n as f64;
        assert!((msq * n as f64 - 1.0).abs() < 0.1, "{msq}");
        assert!(sample_gue(1, 0).is_err());
    }

    #[test]
    fn assemble_examples() {
        let ht = sample_gue(6, 1).unwrap();
        let same = assemble(&ht, &DiagonalProfile::uniform(6).unwrap()).unwrap();
        assert_eq!(same, ht);
        let d = vec![1.0, -2.0, 0.5, 0.0, 3.0, 4.0];
        let zero = assemble(&ht, &DiagonalProfile::new(vec![0.0; 6], d.clone()).unwrap()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expect = if i == j { d[i] } else { 0.0 };
                assert_eq!(zero.get(i, j), Complex64::new(expect, 0.0));
            }
        }
        let x = HermitianMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let p = DiagonalProfile::new(vec![1.0, 2.0], vec![3.0, 0.0]).unwrap();
        let h = assemble(&x, &p).unwrap();
        assert_eq!(h, HermitianMatrix::from_real_rows(&[&[3.0, 2.0], &[2.0, 0.0]]).unwrap());
        assert!(matches!(
            assemble(&x, &DiagonalProfile::uniform(3).unwrap()),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn dos_counting_example() {
        let grid = BinGrid::uniform(-2.0, 2.0, 4).unwrap();
        let bins = estimate_dos(&[vec![-1.0, 1.0]], &grid).unwrap();
        let rho: Vec<f64> = bins.iter().map(|b| b.rho).collect();
        // Bins are closed on the left; each eigenvalue carries weight 1/(N·width) = 1/2.
        assert_eq!(rho, vec![0.0, 0.5, 0.0, 0.5]);
        let total: f64 = bins.iter().map(|b| b.rho * b.width).sum();
        assert_eq!(total, 1.0);
        assert!(BinGrid::uniform(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn band_exclusion_drops_central_bins() {
        let grid = BinGrid::uniform(-1.0, 1.0, 20).unwrap().excluding_band(0.05);
        let bins = estimate_dos(&[vec![0.5]], &grid).unwrap();
        assert_eq!(bins.len(), 18);
        assert!(bins.iter().all(|b| b.center.abs() > 0.05));
        // Edges land on ±0.2 only up to rounding.
        let grid = BinGrid::uniform(-4.0, 4.0, 40).unwrap().excluding_band(0.2);
        assert_eq!(estimate_dos(&[vec![0.5]], &grid).unwrap().len(), 38);
    }

    #[test]
    fn nearest_k_and_half_width_windows() {
        let v = [-3.0, -1.0, -0.2, 0.1, 0.3, 2.0];
        let w = EnergyWindow::NearestK { center: 0.0, count: 3 };
        assert_eq!(w.select(&v), Some((2, 4)));
        let w = EnergyWindow::NearestK { center: 10.0, count: 2 };
        assert_eq!(w.select(&v), Some((4, 5)));
        let w = EnergyWindow::NearestK { center: 0.0, count: 100 };
        assert_eq!(w.select(&v), Some((0, 5)));
        let w = EnergyWindow::HalfWidth { center: 0.0, half_width: 0.25 };
        assert_eq!(w.select(&v), Some((2, 3)));
        let w = EnergyWindow::HalfWidth { center: 1.0, half_width: 0.1 };
        assert_eq!(w.select(&v), None);
        assert_eq!(EnergyWindow::default_for(0.0, 100), EnergyWindow::NearestK { center: 0.0, count: 8 });
        assert_eq!(EnergyWindow::default_for(0.0, 1024), EnergyWindow::NearestK { center: 0.0, count: 51 });
    }

    #[test]
    fn q1_total_is_exactly_normalized_and_empty_window_errors() {
        let h = assemble(&sample_gue(40, 3).unwrap(), &DiagonalProfile::new((1..=40).map(|i| 40.0 / i as f64).collect(), vec![0.3; 40]).unwrap()).unwrap();
        let es = linalg::eig_hermitian(&h).unwrap();
        let w = EnergyWindow::NearestK { center: 0.0, count: 6 };
        let m = estimate_moments(&[es.clone(), es.clone()], &w, 1).unwrap();
        assert!((m.total.value - 1.0).abs() < 1e-12);
        let far = EnergyWindow::HalfWidth { center: 1e6, half_width: 1.0 };
        assert!(matches!(estimate_moments(&[es], &far, 2), Err(Error::EmptyWindow { .. })));
    }

    #[test]
    fn ratio_estimator() {
        let e = MCEstimate::from_ratio(&[2.0, 4.0], &[1.0, 2.0]).unwrap();
        assert_eq!(e.value, 2.0);
        assert_eq!(e.std_error, 0.0);
        let e = MCEstimate::from_samples(&[1.0, 3.0]).unwrap();
        assert_eq!((e.value, e.std_error), (2.0, 1.0));
    }

    fn small_spec(realizations: usize) -> EnsembleSpec {
        EnsembleSpec {
            source: ProfileSource::GaussianW { n: 32, sigma: 2.0 },
            realizations,
            window: EnergyWindow::NearestK { center: 1.0, count: 4 },
            q_list: vec![1, 2],
            grid: Some(BinGrid::uniform(-4.0, 4.0, 16).unwrap()),
            base_seed: 99,
        }
    }

    #[test]
    fn ensemble_is_deterministic_and_single_realization_matches_manual() {
        let a = run_ensemble(&small_spec(6)).unwrap();
        let b = run_ensemble(&small_spec(6)).unwrap();
        assert_eq!(a, b);
        assert!((a.moment(1).unwrap().total.value - 1.0).abs() < 1e-12);

        let spec = small_spec(1);
        let one = run_ensemble(&spec).unwrap();
        let seed = rng::realization_seed(99, 0);
        let p = spec.source.profile(seed).unwrap();
        let es = linalg::eig_hermitian(&assemble(&sample_gue(32, seed).unwrap(), &p).unwrap()).unwrap();
        let m = estimate_moments(&[es.clone()], &spec.window, 2).unwrap();
        assert!((m.total.value - one.moment(2).unwrap().total.value).abs() < 1e-13);
        let dos = estimate_dos(&[es.values], spec.grid.as_ref().unwrap()).unwrap();
        assert_eq!(dos, one.dos.unwrap());
    }

    #[test]
    fn ensemble_independent_of_thread_count() {
        let spec = small_spec(5);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run_ensemble(&spec)).unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run_ensemble(&spec)).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn report_csvs() {
        let rep = run_ensemble(&small_spec(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = rep.write_csvs(dir.path()).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["dos.csv", "moments_q1.csv", "moments_q2.csv", "moments_total.csv"]);
        let t = Table::read_path(dir.path().join("moments_total.csv")).unwrap();
        assert_eq!(t.headers, ["q", "total", "stderr", "N", "realizations"]);
        assert_eq!(t.len(), 2);
    }
}

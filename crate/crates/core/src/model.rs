//! Diagonal profiles `{w_i}`, `{d_i}` defining `W` and `D`.
//!
//! Sites are stored 0-based; every public output labels them 1-based.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;
use crate::table::{Cell, Table};

/// The diagonal entries of `W` and `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalProfile {
    w: Vec<f64>,
    d: Vec<f64>,
}

impl DiagonalProfile {
    /// Validates lengths and finiteness.
    pub fn new(w: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Argument("profile must have at least one site".into()));
        }
        if w.len() != d.len() {
            return Err(Error::Dimension {
                expected: w.len(),
                found: d.len(),
            });
        }
        if let Some(i) = w.iter().chain(&d).position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "non-finite profile entry at site {}",
                i % w.len() + 1
            )));
        }
        Ok(Self { w, d })
    }

    /// `w_i = 1`, `d_i = 0`: the plain GUE.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n], vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Adds `c` to every `d_i`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            w: self.w.clone(),
            d: self.d.iter().map(|d| d + c).collect(),
        }
    }

    /// Table with columns `i,w,d`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["i", "w", "d"]);
        for (i, (&w, &d)) in self.w.iter().zip(&self.d).enumerate() {
            t.push(vec![Cell::from(i + 1), w.into(), d.into()]);
        }
        t
    }

    /// Inverse of [`to_table`](Self::to_table); rows must be in site order.
    pub fn from_table(t: &Table) -> Result<Self> {
        let idx = t.column_f64("i")?;
        for (k, &i) in idx.iter().enumerate() {
            if i != (k + 1) as f64 {
                return Err(Error::Parse(format!(
                    "profile row {} has site index {i}, expected {}",
                    k + 2,
                    k + 1
                )));
            }
        }
        Self::new(t.column_f64("w")?, t.column_f64("d")?)
    }
}

/// Parameters of the Gaussian-`W` ensemble (`D = 0`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianWParams {
    pub sigma: f64,
    /// Exponent used when `sigma` was set as `N^gamma`; informational.
    pub gamma: Option<f64>,
    pub seed: u64,
}

impl GaussianWParams {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            sigma,
            gamma: None,
            seed,
        })
    }

    /// `sigma = n^gamma`.
    pub fn from_gamma(n: usize, gamma: f64, seed: u64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::Argument(format!("gamma must be >= 0, got {gamma}")));
        }
        let mut p = Self::new(sigma_of_n(n, gamma)?, seed)?;
        p.gamma = Some(gamma);
        Ok(p)
    }
}

/// `w_i = d_i = n / i` for `i = 1..n`.
pub fn build_inverse_index_profile(n: usize) -> Result<DiagonalProfile> {
    if n == 0 {
        return Err(Error::Argument("n must be >= 1".into()));
    }
    let w: Vec<f64> = (1..=n).map(|i| n as f64 / i as f64).collect();
    DiagonalProfile::new(w.clone(), w)
}

/// Draws `w_i ~ N(0, sigma^2)` i.i.d. with `d_i = 0`, deterministically from
/// `params.seed`.
pub fn sample_gaussian_w_profile(n: usize, params: &GaussianWParams) -> Result<DiagonalProfile> {
    if n == 0 {
        return Err(Error::Argument("n must be >= 1".into()));
    }
    let normal = Normal::new(0.0, params.sigma)
        .map_err(|e| Error::Argument(format!("invalid sigma: {e}")))?;
    let mut rng = rng::stream(params.seed, rng::STREAM_PROFILE);
    let w: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    DiagonalProfile::new(w, vec![0.0; n])
}

/// `n^gamma`.
pub fn sigma_of_n(n: usize, gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Argument("n must be >= 1".into()));
    }
    Ok((n as f64).powf(gamma))
}

//! Power-law fits in log-log coordinates.

use crate::error::{Error, Result};

/// `y ≈ prefactor · x^exponent` by ordinary least squares on `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_std_error: f64,
    pub prefactor: f64,
    pub points: usize,
}

pub fn power_law_fit(x: &[f64], y: &[f64]) -> Result<PowerLawFit> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Argument("power-law fit needs at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Argument("power-law fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("all abscissae are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if lx.len() > 2 {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(PowerLawFit {
        exponent: slope,
        exponent_std_error: se,
        prefactor: intercept.exp(),
        points: lx.len(),
    })
}

/// Scaling of `Î_q` with `N` against the prediction `Î_q ∝ N^{(γ-1)(q-1)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentScalingFit {
    pub q: u32,
    pub gamma: f64,
    pub exponent_fit: f64,
    pub exponent_std_error: f64,
    pub exponent_theory: f64,
    /// `1 + exponent_fit/(q - 1)`.
    pub d_q_fit: f64,
    /// `1 - γ`.
    pub d_q: f64,
}

/// Fits `ln Î_q` against `ln N`. Requires at least four sizes spanning a
/// factor of eight or more.
pub fn fractal_dimension_fit(series: &[(usize, f64)], q: u32, gamma: f64) -> Result<MomentScalingFit> {
    if q < 2 {
        return Err(Error::Argument(format!("q must be >= 2, got {q}")));
    }
    if series.len() < 4 {
        return Err(Error::Argument(format!(
            "need at least four sizes, got {}",
            series.len()
        )));
    }
    let ns: Vec<f64> = series.iter().map(|p| p.0 as f64).collect();
    let lo = ns.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ns.iter().copied().fold(0.0, f64::max);
    if !(hi / lo >= 8.0) {
        return Err(Error::Argument(format!(
            "sizes span a factor of {} but at least 8 is required",
            hi / lo
        )));
    }
    let ys: Vec<f64> = series.iter().map(|p| p.1).collect();
    let fit = power_law_fit(&ns, &ys)?;
    let qm1 = f64::from(q - 1);
    Ok(MomentScalingFit {
        q,
        gamma,
        exponent_fit: fit.exponent,
        exponent_std_error: fit.exponent_std_error,
        exponent_theory: (gamma - 1.0) * qm1,
        d_q_fit: 1.0 + fit.exponent / qm1,
        d_q: 1.0 - gamma,
    })
}

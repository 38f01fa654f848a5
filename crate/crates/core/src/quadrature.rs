//! Quadrature rules for Gaussian expectations.
//!
//! Two independent routes are provided. [`GaussHermite`] is the classical
//! fixed-node rule for `∫ f(x) exp(-x^2) dx`; it is exact for polynomials but
//! converges slowly when `f` has structure on a scale much finer than the
//! Gaussian width. [`adaptive_integrate`] is a globally adaptive 7/15-point
//! Gauss–Kronrod scheme on finite panels, which [`gaussian_average`] applies to
//! the density-weighted integrand so that sharp Lorentzian peaks are resolved.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss–Hermite rule (weight `exp(-x^2)`).
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds the rule from the eigenvalues of the Jacobi matrix
    /// (Golub–Welsch), then polishes every node by Newton iteration on the
    /// orthonormal Hermite recurrence, which also yields the weights.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("Gauss-Hermite rule needs n >= 1".into()));
        }
        const PI_POW_M14: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
        let mut nodes = vec![0.0; n];
        let mut off: Vec<f64> = (1..n.max(2)).map(|k| (k as f64 / 2.0).sqrt()).collect();
        let mut z_unused = [0.0];
        let mut work = [0.0];
        let mut info = 0;
        unsafe {
            lapack::dstev(b'N', n as i32, &mut nodes, &mut off, &mut z_unused, 1, &mut work, &mut info);
        }
        if info != 0 {
            return Err(Error::Lapack { routine: "dstev", info });
        }
        nodes.reverse();
        let nf = n as f64;
        let mut weights = vec![0.0; n];
        for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
            let mut z = *x;
            let mut pp = 1.0;
            for _ in 0..20 {
                let mut p1 = PI_POW_M14;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            *x = z;
            *w = 2.0 / (pp * pp);
        }
        // Enforce exact symmetry.
        for i in 0..n / 2 {
            let x = 0.5 * (nodes[i] - nodes[n - 1 - i]);
            let w = 0.5 * (weights[i] + weights[n - 1 - i]);
            nodes[i] = x;
            nodes[n - 1 - i] = -x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    /// `E[f(X)]` for `X ~ N(0, sigma^2)`.
    pub fn gaussian_average(&self, sigma: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let scale = std::f64::consts::SQRT_2 * sigma;
        let sum: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * f(scale * u))
            .sum();
        sum / std::f64::consts::PI.sqrt()
    }
}

// 15-point Kronrod extension of the 7-point Gauss–Legendre rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Kronrod estimate and |Kronrod - Gauss| on `[a, b]`.
fn gauss_kronrod_15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Globally adaptive Gauss–Kronrod integration over the panels delimited by
/// `breakpoints` (sorted, at least two). Bisects the panel with the largest
/// error estimate until the total estimate drops below `rel_tol * |I|`
/// (or `abs_tol`).
pub fn adaptive_integrate(
    mut f: impl FnMut(f64) -> f64,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    if breakpoints.len() < 2 {
        return Err(Error::Argument("need at least two breakpoints".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for pair in breakpoints.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if !(b > a) {
            continue;
        }
        let (value, error) = gauss_kronrod_15(&mut f, a, b);
        evaluations += 15;
        heap.push(Panel { a, b, value, error });
    }
    loop {
        let value: f64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Numeric("non-finite integrand".into()));
        }
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral {
                value,
                error_estimate: error,
                evaluations,
            });
        }
        if heap.len() >= max_panels {
            return Err(Error::Numeric(format!(
                "adaptive quadrature did not reach tolerance: estimate {value:e} +- {error:e} after {} panels",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel is at machine resolution; keep its estimate.
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gauss_kronrod_15(&mut f, a, b);
            evaluations += 15;
            heap.push(Panel { a, b, value, error });
        }
    }
}

/// Number of standard deviations beyond which the Gaussian tail is dropped
/// (`exp(-38^2/2)` is below the smallest normal double).
const TAIL_CUTOFF: f64 = 38.0;

/// `E[f(X)]` for `X ~ N(0, sigma^2)` and an even integrand `f`, by adaptive
/// Gauss–Kronrod quadrature on `[0, 38 sigma]`.
///
/// `features` lists abscissae where `f` varies rapidly (peak centres and
/// widths); they become panel breakpoints.
pub fn gaussian_average_even(
    f: impl Fn(f64) -> f64,
    sigma: f64,
    features: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Integral> {
    if !(sigma > 0.0) {
        return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
    }
    let upper = TAIL_CUTOFF * sigma;
    let mut points: Vec<f64> = std::iter::once(0.0)
        .chain(features.iter().copied().filter(|&x| x > 0.0 && x < upper))
        .chain([sigma, 3.0 * sigma, 8.0 * sigma].into_iter().filter(|&x| x < upper))
        .chain(std::iter::once(upper))
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    let norm = 2.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    let inv_two_var = 0.5 / (sigma * sigma);
    let integrand = |x: f64| f(x) * (-x * x * inv_two_var).exp() * norm;
    adaptive_integrate(integrand, &points, rel_tol, abs_tol, 20_000)
}

/// `E[f(X)]` for `X ~ N(0, sigma^2)` with no symmetry assumption on `f`.
pub fn gaussian_average(
    f: impl Fn(f64) -> f64,
    sigma: f64,
    features: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Integral> {
    if !(sigma > 0.0) {
        return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
    }
    let upper = TAIL_CUTOFF * sigma;
    let mut points: Vec<f64> = features
        .iter()
        .flat_map(|&x| [x, -x])
        .chain([0.0, sigma, -sigma, upper, -upper])
        .filter(|x| x.abs() <= upper)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    let inv_two_var = 0.5 / (sigma * sigma);
    let integrand = |x: f64| f(x) * (-x * x * inv_two_var).exp() * norm;
    adaptive_integrate(integrand, &points, rel_tol, abs_tol, 20_000)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_rule_integrates_polynomials_exactly() {
        // E[X^{2k}] = sigma^{2k} (2k-1)!!
        let gh = GaussHermite::new(20).unwrap();
        let sigma = 1.7_f64;
        let mut double_fact = 1.0;
        for k in 0..=19 {
            if k > 0 {
                double_fact *= (2 * k - 1) as f64;
            }
            let exact = sigma.powi(2 * k) * double_fact;
            let got = gh.gaussian_average(sigma, |x| x.powi(2 * k as i32));
            assert!((got - exact).abs() <= 1e-12 * exact, "k = {k}: {got} vs {exact}");
        }
        let odd = gh.gaussian_average(sigma, |x| x.powi(5));
        assert!(odd.abs() < 1e-12);
    }

    #[test]
    fn hermite_rule_weights_sum_to_sqrt_pi() {
        for n in [1, 2, 7, 100, 200, 400] {
            let gh = GaussHermite::new(n).unwrap();
            let s: f64 = gh.weights.iter().sum();
            assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-12, "n = {n}: {s}");
            assert!(gh.nodes.windows(2).all(|w| w[0] > w[1]));
        }
    }

    #[test]
    fn kronrod_rule_exact_for_degree_22() {
        let mut f = |x: f64| x.powi(22) + 3.0 * x.powi(7) - 1.0;
        let (v, _) = gauss_kronrod_15(&mut f, -1.0, 2.0);
        let exact = (2f64.powi(23) + 1.0) / 23.0 + 3.0 * (2f64.powi(8) - 1.0) / 8.0 - 3.0;
        assert!((v - exact).abs() < 1e-12 * exact.abs());
    }

    #[test]
    fn adaptive_resolves_narrow_lorentzian() {
        // ∫_{-10}^{10} eps / ((x-1)^2 + eps^2) dx = atan(9/eps) + atan(11/eps)
        let eps: f64 = 1e-4;
        let exact = (9.0 / eps).atan() + (11.0 / eps).atan();
        let r = adaptive_integrate(
            |x| eps / ((x - 1.0).powi(2) + eps * eps),
            &[-10.0, 10.0],
            1e-12,
            0.0,
            10_000,
        )
        .unwrap();
        assert!((r.value - exact).abs() < 1e-10 * exact, "{} vs {exact}", r.value);
    }

    #[test]
    fn gaussian_average_moments() {
        let sigma = 3.0;
        let r = gaussian_average_even(|x| x.powi(4), sigma, &[], 1e-13, 0.0).unwrap();
        assert!((r.value - 3.0 * sigma.powi(4)).abs() < 1e-11 * 3.0 * sigma.powi(4));
        let odd = gaussian_average(|x| x.powi(3) / (1.0 + x * x), sigma, &[], 1e-12, 1e-14).unwrap();
        assert!(odd.value.abs() < 1e-12);
    }
}

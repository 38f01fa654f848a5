//! Theory averaged over Gaussian `W` (`w_i ~ N(0, σ^2)`, `D = 0`).
//!
//! For large `N` the saddle parameters self-average, and the site sums become
//! expectations over `x ~ N(0, σ^2)`. With `Q = t + i s`, both equations are
//! the parts of one complex condition
//!
//! ```text
//! G(Q) = ⟨x^2 / (E - x^2 Q)⟩ = Q,     Re G = t,   Im G / s = 1.
//! ```
//!
//! The expectation has the closed form `G(Q) = (-1 + i c F₋)/Q` with
//! `c = √(π/2)·√E/σ` and the pair
//!
//! ```text
//! F± = exp(-E(t ± is)/(2|Q|²σ²)) / √(t ∓ is) · (1 ± i erfi(√(E(t ± is)/(2|Q|²σ²)))),
//! ```
//!
//! which equals `F₋ = w(u)/√Q` with `u = -√(E/Q)/(σ√2)` and `w` the Faddeeva
//! function. That form never overflows, so it is the one evaluated here.
//!
//! Everything assumes `E > 0`, `t > 0`, `s > 0`. Negative energies map onto
//! positive ones through `E → -E`, `t → -t`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::power_law_fit;
use crate::quadrature::{gaussian_average_even, GaussHermite};
use crate::special::{erfi, factorial, faddeeva};
use crate::table::{Cell, Table};

/// Smallest `|E|` the averaged solver accepts.
pub const E_MIN: f64 = 1e-3;
/// Residual threshold for [`solve_averaged`].
pub const TOLERANCE: f64 = 1e-11;
/// Imaginary leftovers above this (relative) size indicate a branch fault.
pub const CONSISTENCY_TOL: f64 = 1e-9;
/// Largest `q` accepted by [`moment_operator`].
pub const MAX_OPERATOR_Q: u32 = 6;

const SQRT_PI: f64 = 1.772_453_850_905_516;

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

fn check_domain(t: f64, s: f64, e: f64, sigma: f64) -> Result<()> {
    if t > 0.0 && s > 0.0 && e > 0.0 && sigma > 0.0 && t.is_finite() && s.is_finite() && e.is_finite() && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "averaged formulas need t, s, E, sigma > 0; got t = {t}, s = {s}, E = {e}, sigma = {sigma}"
        )))
    }
}

/// The functions `F₊` and `F₋` at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FPair {
    pub f_plus: Complex64,
    pub f_minus: Complex64,
}

/// `F±(t, s)` through the Faddeeva function. Each member is evaluated
/// separately, so `f_minus == conj(f_plus)` is a genuine check.
pub fn f_pair(t: f64, s: f64, e: f64, sigma: f64) -> Result<FPair> {
    check_domain(t, s, e, sigma)?;
    let q = Complex64::new(t, s);
    let scale = e.sqrt() / (sigma * std::f64::consts::SQRT_2);
    // F₋ = w(u)/√Q,  u = -scale/√Q (upper half-plane).
    let root_q = q.sqrt();
    let u = -scale / root_q;
    let f_minus = faddeeva(u) / root_q;
    // F₊ = w(v)/√Q̄,  v = scale/√Q̄ = √(E Q̄/(2|Q|²σ²)).
    let root_qc = q.conj().sqrt();
    let v = -scale / root_qc;
    let f_plus = faddeeva(-v) / root_qc;
    Ok(FPair { f_plus, f_minus })
}

/// `F±` evaluated literally from the defining expression with `erfi`.
/// Overflows for small `σ`; used to cross-check [`f_pair`].
pub fn f_pair_literal(t: f64, s: f64, e: f64, sigma: f64) -> Result<FPair> {
    check_domain(t, s, e, sigma)?;
    let m = t * t + s * s;
    let one = |sign: f64| -> Result<Complex64> {
        let z = Complex64::new(t, sign * s);
        let arg = e * z / (2.0 * m * sigma * sigma);
        let root = arg.sqrt();
        Ok((-arg).exp() / Complex64::new(t, -sign * s).sqrt() * (1.0 + sign * i() * erfi(root)?))
    };
    Ok(FPair {
        f_plus: one(1.0)?,
        f_minus: one(-1.0)?,
    })
}

/// `c = √(π/2)·√E/σ`.
fn c_factor(e: f64, sigma: f64) -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * e.sqrt() / sigma
}

/// `G(Q) = ⟨x^2/(E - x^2 Q)⟩` in closed form, assembled symmetrically from
/// `F₋` (for `G`) and `F₊` (for `conj G`). Returns `(Re G, Im G)` after
/// checking that the two halves agree.
pub fn averaged_g(t: f64, s: f64, e: f64, sigma: f64) -> Result<Complex64> {
    let fp = f_pair(t, s, e, sigma)?;
    let q = Complex64::new(t, s);
    let c = c_factor(e, sigma);
    let g = (-1.0 + i() * c * fp.f_minus) / q;
    let g_conj = (-1.0 - i() * c * fp.f_plus) / q.conj();
    let re = 0.5 * (g + g_conj);
    let im = (g - g_conj) / (2.0 * i());
    let scale = g.norm().max(1e-300);
    let leftover = re.im.abs().max(im.im.abs()) / scale;
    if leftover > CONSISTENCY_TOL {
        return Err(Error::Consistency {
            what: "averaged G",
            imag: leftover,
            tol: CONSISTENCY_TOL,
        });
    }
    Ok(Complex64::new(re.re, im.re))
}

/// Residuals `(r_1, r_t) = (1 - Im G/s, t - Re G)` of the averaged system.
pub fn averaged_residuals(t: f64, s: f64, e: f64, sigma: f64) -> Result<(f64, f64)> {
    let g = averaged_g(t, s, e, sigma)?;
    Ok((1.0 - g.im / s, t - g.re))
}

/// Residuals in the form
///
/// ```text
/// 1 = (1 + 2t^2 + (i√E/2)√(π/2)σ⁻¹(F₊ - F₋)) / (t^2 + s^2)
/// t = (√E/(2s))√(π/8)σ⁻¹(F₋ + F₊)
/// ```
///
/// Away from the solution these differ from [`averaged_residuals`]; the
/// roots coincide.
pub fn f_pair_residuals(t: f64, s: f64, e: f64, sigma: f64) -> Result<(f64, f64)> {
    let fp = f_pair(t, s, e, sigma)?;
    let k = (std::f64::consts::PI / 2.0).sqrt() / sigma;
    let r1 = 1.0
        - (1.0 + 2.0 * t * t + i() * (e.sqrt() / 2.0) * k * (fp.f_plus - fp.f_minus)) / (t * t + s * s);
    let rt = t - (e.sqrt() / (2.0 * s)) * (k / 2.0) * (fp.f_minus + fp.f_plus);
    let leftover = r1.im.abs().max(rt.im.abs());
    if leftover > CONSISTENCY_TOL * (1.0 + t.abs()) {
        return Err(Error::Consistency {
            what: "F-pair residuals",
            imag: leftover,
            tol: CONSISTENCY_TOL,
        });
    }
    Ok((r1.re, rt.re))
}

/// Peak location and width (in `x`) of `1/D(x)` with `D = (E - x^2 t)^2 + s^2 x^4`.
fn peak_features(t: f64, s: f64, e: f64) -> Vec<f64> {
    let m = t * t + s * s;
    let x_pk = (e * t / m).sqrt();
    let width = (e * s / m) / (2.0 * x_pk.max(1e-300));
    let mut f = vec![x_pk];
    for k in [1.0, 3.0, 10.0, 30.0, 100.0] {
        f.push(x_pk - k * width);
        f.push(x_pk + k * width);
    }
    f.push((e / m.sqrt()).sqrt());
    f
}

/// `⟨x^2/(E - x^2 Q)⟩` by adaptive quadrature of the pre-average integrand.
/// Independent of the closed form; used as its oracle.
pub fn x_system_average_quadrature(t: f64, s: f64, e: f64, sigma: f64) -> Result<Complex64> {
    check_domain(t, s, e, sigma)?;
    let den = |x: f64| {
        let x2 = x * x;
        let a = e - x2 * t;
        a * a + s * s * x2 * x2
    };
    let feats = peak_features(t, s, e);
    let im = gaussian_average_even(|x| s * x.powi(4) / den(x), sigma, &feats, 1e-13, 0.0)?;
    // The real part changes sign at x^2 = E/t; bound its error by the
    // magnitude of the imaginary part.
    let re = gaussian_average_even(
        |x| {
            let x2 = x * x;
            x2 * (e - x2 * t) / den(x)
        },
        sigma,
        &feats,
        1e-13,
        1e-14 * im.value.abs().max(1e-300),
    )?;
    Ok(Complex64::new(re.value, im.value))
}

/// `⟨x^2/(E - x^2 Q)⟩` by an `n`-node Gauss–Hermite rule.
pub fn x_system_average_hermite(t: f64, s: f64, e: f64, sigma: f64, rule: &GaussHermite) -> Complex64 {
    let q = Complex64::new(t, s);
    let re = rule.gaussian_average(sigma, |x| (x * x / (e - x * x * q)).re);
    let im = rule.gaussian_average(sigma, |x| (x * x / (e - x * x * q)).im);
    Complex64::new(re, im)
}

/// Solution of the averaged system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AveragedSolution {
    pub e: f64,
    pub sigma: f64,
    pub mean_s: f64,
    pub mean_t: f64,
    pub residual_norm: f64,
}

impl AveragedSolution {
    /// The same solution expressed at positive energy.
    fn positive(&self) -> Self {
        if self.e >= 0.0 {
            *self
        } else {
            Self {
                e: -self.e,
                mean_t: -self.mean_t,
                ..*self
            }
        }
    }
}

/// `G'(Q)` for the complex Newton step.
fn averaged_g_derivative(q: Complex64, e: f64, sigma: f64) -> Complex64 {
    let c = c_factor(e, sigma);
    let scale = e.sqrt() / (sigma * std::f64::consts::SQRT_2);
    let root_q = q.sqrt();
    let u = -scale / root_q;
    let w = faddeeva(u);
    let w_prime = -2.0 * u * w + 2.0 * i() / SQRT_PI;
    let q32 = q * root_q;
    1.0 / (q * q) + i() * c / q32 * (-w_prime * u / (2.0 * q) - 1.5 * w / q)
}

/// Closed-form `G` without the symmetric check (inner Newton loop).
fn g_fast(q: Complex64, e: f64, sigma: f64) -> Complex64 {
    let scale = e.sqrt() / (sigma * std::f64::consts::SQRT_2);
    let root_q = q.sqrt();
    let f_minus = faddeeva(-scale / root_q) / root_q;
    (-1.0 + i() * c_factor(e, sigma) * f_minus) / q
}

fn newton_averaged(e: f64, sigma: f64, t0: f64, s0: f64) -> Option<(f64, f64)> {
    let mut q = Complex64::new(t0, s0);
    let mut phi = g_fast(q, e, sigma) - q;
    for _ in 0..100 {
        let r = phi.norm();
        if r <= 0.1 * TOLERANCE * q.norm().max(1e-3) {
            return Some((q.re, q.im));
        }
        let step = -phi / (averaged_g_derivative(q, e, sigma) - 1.0);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let q_new = q + lambda * step;
            if q_new.re > 0.0 && q_new.im > 0.0 {
                let phi_new = g_fast(q_new, e, sigma) - q_new;
                if phi_new.norm() < r {
                    q = q_new;
                    phi = phi_new;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return (r <= TOLERANCE).then_some((q.re, q.im));
        }
    }
    None
}

/// Solves the averaged system at `(e, sigma)`, `|e| >= E_MIN`. `init` is
/// `(t, s)`; the default is the large-σ asymptote `t = √(πE)/(4σ)`, `s = 1`.
pub fn solve_averaged(e: f64, sigma: f64, init: Option<(f64, f64)>) -> Result<AveragedSolution> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
    }
    if !(e.abs() >= E_MIN && e.is_finite()) {
        return Err(Error::Argument(format!(
            "averaged solver needs |E| >= {E_MIN}, got {e}"
        )));
    }
    let ep = e.abs();
    let default = ((std::f64::consts::PI * ep).sqrt() / (4.0 * sigma), 1.0);
    let mut starts = Vec::new();
    if let Some((t, s)) = init {
        starts.push((t.abs().max(1e-12), s.abs().max(1e-12)));
    }
    starts.push(default);
    for k in [0.25, 4.0, 0.05, 20.0] {
        starts.push((default.0 * k, 1.0));
    }
    starts.push((ep / 2.0, 0.5));
    let mut best: Option<(f64, f64, f64)> = None;
    for (t0, s0) in starts {
        if let Some((t, s)) = newton_averaged(ep, sigma, t0, s0) {
            let (r1, rt) = averaged_residuals(t, s, ep, sigma)?;
            let res = r1.abs().max(rt.abs());
            if res <= TOLERANCE {
                return Ok(AveragedSolution {
                    e,
                    sigma,
                    mean_s: s,
                    mean_t: if e < 0.0 { -t } else { t },
                    residual_norm: res,
                });
            }
            if best.map_or(true, |b| res < b.2) {
                best = Some((t, s, res));
            }
        }
    }
    let (t, s, residual) = best.unwrap_or((default.0, default.1, f64::INFINITY));
    Err(Error::Convergence {
        iterations: 100,
        residual,
        t,
        s,
    })
}

/// Solves along an energy grid with warm starts.
pub fn solve_averaged_sweep(energies: &[f64], sigma: f64) -> Vec<Result<AveragedSolution>> {
    let mut prev: Option<(f64, f64)> = None;
    energies
        .iter()
        .map(|&e| {
            let init = prev.map(|(t, s)| (t.abs(), s));
            let r = solve_averaged(e, sigma, init);
            if let Ok(sol) = &r {
                prev = Some((sol.mean_t, sol.mean_s));
            }
            r
        })
        .collect()
}

/// `ρ̂(E) = 2⟨s⟩⟨t⟩/(πE)`.
pub fn dos_averaged(sol: &AveragedSolution) -> f64 {
    2.0 * sol.mean_s * sol.mean_t / (std::f64::consts::PI * sol.e)
}

/// Closed form of `Î_2` in terms of `F±`.
pub fn moment_q2_closed(sol: &AveragedSolution, n: usize) -> Result<f64> {
    let sol = sol.positive();
    let (e, sigma, t, s) = (sol.e, sol.sigma, sol.mean_t, sol.mean_s);
    let fp = f_pair(t, s, e, sigma)?;
    let m = t * t + s * s;
    let sig2 = sigma * sigma;
    let q = Complex64::new(t, s);
    let qc = q.conj();
    let bracket = (qc / s + 0.5 * i() * (1.0 + e * q / (m * sig2))) * fp.f_plus
        + (q / s - 0.5 * i() * (1.0 + e * qc / (m * sig2))) * fp.f_minus
        + (2.0 * e).sqrt() * t / (SQRT_PI * sigma * m);
    let value = e.sqrt() / (8.0 * n as f64 * t * t * s * s * sigma)
        * (std::f64::consts::PI / 2.0).sqrt()
        * bracket;
    if value.im.abs() > CONSISTENCY_TOL * value.re.abs() {
        return Err(Error::Consistency {
            what: "closed-form second moment",
            imag: value.im.abs() / value.re.abs(),
            tol: CONSISTENCY_TOL,
        });
    }
    Ok(value.re)
}

/// `B_q(y) = (1/(σy))√(π/8)[(t + iy)^{q-1} F₋(t, y) + (t - iy)^{q-1} F₊(t, y)]`.
fn b_q(q: u32, y: f64, t: f64, e: f64, sigma: f64) -> Result<f64> {
    let fp = f_pair(t, y, e, sigma)?;
    let p = Complex64::new(t, y).powu(q - 1);
    let v = (p * fp.f_minus + p.conj() * fp.f_plus) * ((std::f64::consts::PI / 8.0).sqrt() / (sigma * y));
    Ok(v.re)
}

/// `k`-th derivative of `f` at `x0` by central differences of step `h`,
/// extrapolated in `h → 0` (Ridders' tableau with step ratio 1.4).
/// Returns the estimate and its error estimate.
pub fn richardson_derivative(
    f: impl Fn(f64) -> Result<f64>,
    x0: f64,
    k: u32,
    h0: f64,
) -> Result<(f64, f64)> {
    const CON: f64 = 1.4;
    const LEVELS: usize = 12;
    let binom: Vec<f64> = (0..=k)
        .map(|j| (0..j).fold(1.0, |acc, m| acc * f64::from(k - m) / f64::from(m + 1)))
        .collect();
    let diff = |h: f64| -> Result<f64> {
        let mut acc = 0.0;
        for j in 0..=k {
            let x = x0 + (f64::from(k) / 2.0 - f64::from(j)) * h;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom[j as usize] * f(x)?;
        }
        Ok(acc / h.powi(k as i32))
    };
    if k == 0 {
        return Ok((f(x0)?, 0.0));
    }
    let mut table = vec![vec![0.0; LEVELS]; LEVELS];
    let mut h = h0;
    table[0][0] = diff(h)?;
    let mut best = (table[0][0], f64::INFINITY);
    for col in 1..LEVELS {
        h /= CON;
        table[0][col] = diff(h)?;
        let mut fac = CON * CON;
        for row in 1..=col {
            table[row][col] =
                (table[row - 1][col] * fac - table[row - 1][col - 1]) / (fac - 1.0);
            fac *= CON * CON;
            let err = (table[row][col] - table[row - 1][col])
                .abs()
                .max((table[row][col] - table[row - 1][col - 1]).abs());
            if err <= best.1 {
                best = (table[row][col], err);
            }
        }
        if (table[col][col] - table[col - 1][col - 1]).abs() >= 2.0 * best.1 {
            break;
        }
    }
    Ok(best)
}

/// `Î_q = (q√E/(2^q⟨t⟩^q N^{q-1}))·[(-1/(2y) d/dy)^{q-1} B_q(y)]_{y=⟨s⟩}`.
///
/// The operator is `(-d/du)^{q-1}` in `u = y^2`, applied by one extrapolated
/// finite-difference derivative of order `q - 1`.
pub fn moment_operator(q: u32, sol: &AveragedSolution, n: usize) -> Result<f64> {
    if !(2..=MAX_OPERATOR_Q).contains(&q) {
        return Err(Error::Argument(format!(
            "operator route supports 2 <= q <= {MAX_OPERATOR_Q}, got {q}"
        )));
    }
    let sol = sol.positive();
    let (e, sigma, t, s) = (sol.e, sol.sigma, sol.mean_t, sol.mean_s);
    check_domain(t, s, e, sigma)?;
    let k = q - 1;
    let u0 = s * s;
    // Keep every stencil point at u >= u0/2.
    let h0 = u0 / f64::from(k.max(1)).max(2.5);
    let (d, err) = richardson_derivative(|u| b_q(q, u.sqrt(), t, e, sigma), u0, k, h0)?;
    if !(err <= 1e-8 * d.abs()) {
        return Err(Error::Numeric(format!(
            "derivative extrapolation for q = {q} did not converge: {d:e} +- {err:e}"
        )));
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(f64::from(q) * e.sqrt() / (2f64.powi(q as i32) * t.powi(q as i32) * (n as f64).powi(k as i32))
        * sign
        * d)
}

/// `Î_q = (E^q q!/(2^q⟨t⟩^q N^{q-1}))·⟨x^{2q}/D^q⟩` by adaptive quadrature.
pub fn moment_quadrature_oracle(q: u32, sol: &AveragedSolution, n: usize) -> Result<f64> {
    if q == 0 {
        return Err(Error::Argument("q must be >= 1".into()));
    }
    let sol = sol.positive();
    let (e, sigma, t, s) = (sol.e, sol.sigma, sol.mean_t, sol.mean_s);
    check_domain(t, s, e, sigma)?;
    let qi = q as i32;
    let avg = gaussian_average_even(
        |x| {
            let x2 = x * x;
            let a = e - x2 * t;
            (x2 / (a * a + s * s * x2 * x2)).powi(qi)
        },
        sigma,
        &peak_features(t, s, e),
        1e-13,
        0.0,
    )?;
    Ok(e.powi(qi) * factorial(q)? / (2f64.powi(qi) * t.powi(qi) * (n as f64).powi(qi - 1)) * avg.value)
}

/// Large-σ solution at `E = 1`: `(⟨t⟩, ⟨s⟩) ≈ (√π/(4σ), 1)`. Meaningful for σ ≳ 10.
pub fn asymptotic_solution(sigma: f64) -> (f64, f64) {
    (SQRT_PI / (4.0 * sigma), 1.0)
}

/// `Î_q ≈ q(σ/(√π N))^{q-1} ∏_{k=0}^{q-2} |q - (5 + 4k)/2|`.
pub fn asymptotic_moment(q: u32, sigma: f64, n: usize) -> f64 {
    let base = sigma / (SQRT_PI * n as f64);
    let prod: f64 = (0..q.saturating_sub(1))
        .map(|k| (f64::from(q) - (5.0 + 4.0 * f64::from(k)) / 2.0).abs())
        .product();
    f64::from(q) * base.powi(q as i32 - 1) * prod
}

/// Power-law description of the averaged solution near `E = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallEnergyAsymptote {
    pub sigma: f64,
    /// `⟨t⟩ ≈ t_prefactor · E^t_exponent`.
    pub t_prefactor: f64,
    pub t_exponent: f64,
    /// `⟨s⟩` at the lowest fitted energy.
    pub s_limit: f64,
}

impl SmallEnergyAsymptote {
    /// Fits `log⟨t⟩` against `log E` on `points` log-spaced energies in
    /// `[E_MIN, 10 E_MIN]`.
    pub fn fit(sigma: f64, points: usize) -> Result<Self> {
        if points < 3 {
            return Err(Error::Argument("need at least three energies".into()));
        }
        let energies: Vec<f64> = (0..points)
            .map(|k| E_MIN * 10f64.powf(k as f64 / (points - 1) as f64))
            .collect();
        let sols = solve_averaged_sweep(&energies, sigma)
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let ts: Vec<f64> = sols.iter().map(|s| s.mean_t).collect();
        let fit = power_law_fit(&energies, &ts)?;
        Ok(Self {
            sigma,
            t_prefactor: fit.prefactor,
            t_exponent: fit.exponent,
            s_limit: sols[0].mean_s,
        })
    }

    /// `ρ̂(E)` extrapolated below `E_MIN`.
    pub fn dos(&self, e: f64) -> f64 {
        let e = e.abs();
        2.0 * self.s_limit * self.t_prefactor * e.powf(self.t_exponent) / (std::f64::consts::PI * e)
    }
}

/// One row of an averaged sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragedPoint {
    pub solution: AveragedSolution,
    pub rho_hat: f64,
    /// `(q, Î_q)` pairs.
    pub moments: Vec<(u32, f64)>,
}

/// `Î_q` by the preferred route: closed form for `q = 2`, operator otherwise,
/// quadrature for `q = 1` or beyond the operator's range.
pub fn averaged_moment(q: u32, sol: &AveragedSolution, n: usize) -> Result<f64> {
    match q {
        2 => moment_q2_closed(sol, n),
        3..=MAX_OPERATOR_Q => moment_operator(q, sol, n),
        _ => moment_quadrature_oracle(q, sol, n),
    }
}

impl AveragedPoint {
    pub fn compute(sol: AveragedSolution, n: usize, q_list: &[u32]) -> Result<Self> {
        let moments = q_list
            .iter()
            .map(|&q| Ok((q, averaged_moment(q, &sol, n)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            rho_hat: dos_averaged(&sol),
            solution: sol,
            moments,
        })
    }
}

/// `E,sigma,mean_s,mean_t,rho_hat,I{q}_hat...`.
pub fn averaged_table(points: &[AveragedPoint], q_list: &[u32]) -> Table {
    let mut headers: Vec<String> = ["E", "sigma", "mean_s", "mean_t", "rho_hat"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    headers.extend(q_list.iter().map(|q| format!("I{q}_hat")));
    let mut table = Table::new(headers);
    for p in points {
        let s = &p.solution;
        let mut row: Vec<Cell> = vec![
            s.e.into(),
            s.sigma.into(),
            s.mean_s.into(),
            s.mean_t.into(),
            p.rho_hat.into(),
        ];
        for q in q_list {
            let v = p.moments.iter().find(|(k, _)| k == q).map_or(f64::NAN, |m| m.1);
            row.push(v.into());
        }
        table.push(row);
    }
    table
}

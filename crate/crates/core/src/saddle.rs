//! Self-consistency system for an arbitrary diagonal profile.
//!
//! With `a_i = E - d_i - w_i^2 t` and `D_i = a_i^2 + w_i^4 s^2` the system reads
//!
//! ```text
//! t = (1/N) Σ w_i^2 a_i / D_i
//! 1 = (1/N) Σ w_i^4 / D_i
//! ```
//!
//! These are the real and imaginary parts of `Q = (1/N) Σ w_i^2 / (E - d_i - w_i^2 Q)`
//! with `Q = t + i s`. The density of states is `ρ = (s/πN) Σ w_i^2/D_i` and
//! the local moments are `I_q(n) = q!/(πρN)^q · (s w_n^2/D_n)^q`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::DiagonalProfile;
use crate::special::factorial;
use crate::table::{Cell, Table};

/// Convergence threshold on `max(|r_t|, |r_s|)`.
pub const TOLERANCE: f64 = 1e-12;
/// Newton iteration cap.
pub const MAX_ITERATIONS: usize = 200;
/// Below this `s` the solver gives up and reports a spectral edge.
pub const S_FLOOR: f64 = 1e-13;

/// A solution `(s, t)` of the system at energy `e`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaddlePoint {
    pub e: f64,
    pub s: f64,
    pub t: f64,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Residuals and Jacobian at one point.
struct Eval {
    r_t: f64,
    r_s: f64,
    /// `∂(r_t, r_s)/∂(t, s)`, row-major.
    jac: [[f64; 2]; 2],
}

fn evaluate(profile: &DiagonalProfile, e: f64, s: f64, t: f64, jacobian: bool) -> Result<Eval> {
    let nf = profile.n() as f64;
    let (mut g_t, mut g_s) = (0.0, 0.0);
    let (mut tt, mut ts, mut st, mut ss) = (0.0, 0.0, 0.0, 0.0);
    for (i, (&w, &d)) in profile.w().iter().zip(profile.d()).enumerate() {
        let w2 = w * w;
        let a = e - d - w2 * t;
        let b = w2 * s;
        let den = a * a + b * b;
        if den == 0.0 {
            if w2 == 0.0 && a != 0.0 {
                continue;
            }
            return Err(Error::Singularity { site: i + 1 });
        }
        let w4 = w2 * w2;
        g_t += w2 * a / den;
        g_s += w4 / den;
        if jacobian {
            let den2 = den * den;
            tt += w4 * (a * a - b * b) / den2;
            ts += 2.0 * w4 * w2 * a * s / den2;
            st += 2.0 * w4 * w2 * a / den2;
            ss += 2.0 * w4 * w4 * s / den2;
        }
    }
    Ok(Eval {
        r_t: t - g_t / nf,
        r_s: 1.0 - g_s / nf,
        jac: [[1.0 - tt / nf, ts / nf], [-st / nf, ss / nf]],
    })
}

/// Residual pair `(r_t, r_s)`; both vanish at a solution.
pub fn residuals(profile: &DiagonalProfile, e: f64, s: f64, t: f64) -> Result<(f64, f64)> {
    let ev = evaluate(profile, e, s, t, false)?;
    Ok((ev.r_t, ev.r_s))
}

fn norm(ev: &Eval) -> f64 {
    ev.r_t.abs().max(ev.r_s.abs())
}

/// Default starting point `t0 = E/(2·mean(w^4) + ε)`, `s0 = 1`.
pub fn default_init(profile: &DiagonalProfile, e: f64) -> (f64, f64) {
    let m4 = profile.w().iter().map(|w| w.powi(4)).sum::<f64>() / profile.n() as f64;
    (1.0, e / (2.0 * m4 + 1e-12))
}

enum NewtonOutcome {
    Converged(SaddlePoint),
    Stalled,
    Collapsed,
}

fn newton(profile: &DiagonalProfile, e: f64, s0: f64, t0: f64) -> Result<NewtonOutcome> {
    let (mut s, mut t) = (s0.abs().max(S_FLOOR), t0);
    let mut ev = evaluate(profile, e, s, t, true)?;
    for it in 0..MAX_ITERATIONS {
        let r = norm(&ev);
        if r <= TOLERANCE {
            return Ok(NewtonOutcome::Converged(SaddlePoint {
                e,
                s,
                t,
                residual_norm: r,
                iterations: it,
            }));
        }
        let [[a, b], [c, d]] = ev.jac;
        let det = a * d - b * c;
        if !det.is_finite() || det == 0.0 {
            return Ok(NewtonOutcome::Stalled);
        }
        let dt = -(d * ev.r_t - b * ev.r_s) / det;
        let ds = -(-c * ev.r_t + a * ev.r_s) / det;
        // Backtracking on the max-norm; negative s is reflected.
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let t_new = t + lambda * dt;
            let s_new = (s + lambda * ds).abs();
            if s_new > 0.0 {
                if let Ok(ev_new) = evaluate(profile, e, s_new, t_new, true) {
                    if norm(&ev_new) < r {
                        accepted = Some((s_new, t_new, ev_new));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((s_new, t_new, ev_new)) => {
                s = s_new;
                t = t_new;
                ev = ev_new;
            }
            None => return Ok(NewtonOutcome::Stalled),
        }
        if s < S_FLOOR {
            return Ok(NewtonOutcome::Collapsed);
        }
    }
    Ok(NewtonOutcome::Stalled)
}

/// Solves `r_t(t; s) = 0` for fixed `s`. The root lies in `[-1/(2s), 1/(2s)]`
/// because `|w^2 a / D| <= 1/(2s)` term by term.
fn solve_t_for_s(profile: &DiagonalProfile, e: f64, s: f64) -> Result<f64> {
    let half = 0.5 / s;
    let (mut lo, mut hi) = (-half, half);
    let mut t = 0.0_f64.clamp(lo, hi);
    for _ in 0..300 {
        let ev = evaluate(profile, e, s, t, true)?;
        if ev.r_t.abs() <= 0.1 * TOLERANCE {
            return Ok(t);
        }
        if ev.r_t < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let slope = ev.jac[0][0];
        let newton = t - ev.r_t / slope;
        t = if slope.is_finite() && slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
            return Ok(t);
        }
    }
    Ok(t)
}

/// Nested bisection: outer in `s`, inner safeguarded Newton in `t`.
fn fallback(profile: &DiagonalProfile, e: f64) -> Result<(f64, f64)> {
    let r_s_at = |s: f64| -> Result<(f64, f64)> {
        let t = solve_t_for_s(profile, e, s)?;
        Ok((residuals(profile, e, s, t)?.1, t))
    };
    // r_s > 0 for s > 1 because (1/N) Σ w^4/D <= 1/s^2.
    let mut s_hi = 1.5;
    let mut s_lo = s_hi;
    loop {
        s_lo *= 0.5;
        if s_lo < S_FLOOR {
            return Err(Error::SpectralEdge { energy: e });
        }
        let (r, _) = r_s_at(s_lo)?;
        if r < 0.0 {
            break;
        }
        s_hi = s_lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (s_lo + s_hi);
        if !(mid > s_lo && mid < s_hi) {
            break;
        }
        let (r, _) = r_s_at(mid)?;
        if r < 0.0 {
            s_lo = mid;
        } else {
            s_hi = mid;
        }
    }
    let s = 0.5 * (s_lo + s_hi);
    Ok((s, solve_t_for_s(profile, e, s)?))
}

/// Solves the system at energy `e`, starting from `init = (s, t)` or the
/// default guess. Damped Newton with an analytic Jacobian; if it stalls, a
/// nested bisection locates the root and Newton polishes it.
pub fn solve_saddle(
    profile: &DiagonalProfile,
    e: f64,
    init: Option<(f64, f64)>,
) -> Result<SaddlePoint> {
    if !e.is_finite() {
        return Err(Error::Argument(format!("energy must be finite, got {e}")));
    }
    let (s0, t0) = init.unwrap_or_else(|| default_init(profile, e));
    match newton(profile, e, s0, t0)? {
        NewtonOutcome::Converged(sp) => return Ok(sp),
        NewtonOutcome::Stalled | NewtonOutcome::Collapsed => {}
    }
    let (s1, t1) = fallback(profile, e)?;
    match newton(profile, e, s1, t1)? {
        NewtonOutcome::Converged(sp) => Ok(sp),
        NewtonOutcome::Collapsed => Err(Error::SpectralEdge { energy: e }),
        NewtonOutcome::Stalled => {
            let (r_t, r_s) = residuals(profile, e, s1, t1)?;
            let residual = r_t.abs().max(r_s.abs());
            if residual <= TOLERANCE {
                Ok(SaddlePoint {
                    e,
                    s: s1,
                    t: t1,
                    residual_norm: residual,
                    iterations: 0,
                })
            } else {
                Err(Error::Convergence {
                    iterations: MAX_ITERATIONS,
                    residual,
                    t: t1,
                    s: s1,
                })
            }
        }
    }
}

/// Solves along an energy grid, warm-starting each point from the previous
/// successful one.
pub fn solve_sweep(profile: &DiagonalProfile, energies: &[f64]) -> Vec<Result<SaddlePoint>> {
    let mut prev: Option<(f64, f64)> = None;
    energies
        .iter()
        .map(|&e| {
            let res = solve_saddle(profile, e, prev).or_else(|err| match prev {
                Some(_) => solve_saddle(profile, e, None),
                None => Err(err),
            });
            if let Ok(sp) = &res {
                prev = Some((sp.s, sp.t));
            }
            res
        })
        .collect()
}

/// `ρ(E) = (s/πN) Σ w_i^2 / D_i`.
pub fn dos_analytic(profile: &DiagonalProfile, e: f64, sp: &SaddlePoint) -> Result<f64> {
    let (s, t) = (sp.s, sp.t);
    let mut sum = 0.0;
    for (i, (&w, &d)) in profile.w().iter().zip(profile.d()).enumerate() {
        let w2 = w * w;
        if w2 == 0.0 {
            if e == d {
                return Err(Error::Singularity { site: i + 1 });
            }
            continue;
        }
        let a = e - d - w2 * t;
        sum += w2 / (a * a + w2 * w2 * s * s);
    }
    Ok(s * sum / (std::f64::consts::PI * profile.n() as f64))
}

/// `I_q(n) = q!/(πρN)^q · (s w_n^2 / D_n)^q` for every site.
pub fn local_moment(
    profile: &DiagonalProfile,
    q: u32,
    e: f64,
    sp: &SaddlePoint,
    rho: f64,
) -> Result<Vec<f64>> {
    if q == 0 {
        return Err(Error::Argument("q must be >= 1".into()));
    }
    if !(rho > 0.0) {
        return Err(Error::Argument(format!("rho must be positive, got {rho}")));
    }
    let scale = factorial(q)? / (std::f64::consts::PI * rho * profile.n() as f64).powi(q as i32);
    profile
        .w()
        .iter()
        .zip(profile.d())
        .enumerate()
        .map(|(i, (&w, &d))| {
            let w2 = w * w;
            if w2 == 0.0 {
                return if e == d {
                    Err(Error::Singularity { site: i + 1 })
                } else {
                    Ok(0.0)
                };
            }
            let a = e - d - w2 * sp.t;
            let x = sp.s * w2 / (a * a + w2 * w2 * sp.s * sp.s);
            Ok(scale * x.powi(q as i32))
        })
        .collect()
}

/// Analytic observables at one energy.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralAnalytic {
    pub e: f64,
    pub saddle: SaddlePoint,
    pub rho: f64,
    pub local_moments: BTreeMap<u32, Vec<f64>>,
    pub total_moments: BTreeMap<u32, f64>,
}

impl SpectralAnalytic {
    /// Solves at `e` and evaluates `ρ` and `I_q(n)` for every `q` in `q_list`.
    pub fn compute(
        profile: &DiagonalProfile,
        e: f64,
        q_list: &[u32],
        init: Option<(f64, f64)>,
    ) -> Result<Self> {
        let saddle = solve_saddle(profile, e, init)?;
        Self::from_saddle(profile, saddle, q_list)
    }

    pub fn from_saddle(profile: &DiagonalProfile, saddle: SaddlePoint, q_list: &[u32]) -> Result<Self> {
        let e = saddle.e;
        let rho = dos_analytic(profile, e, &saddle)?;
        let mut local_moments = BTreeMap::new();
        let mut total_moments = BTreeMap::new();
        for &q in q_list {
            let m = local_moment(profile, q, e, &saddle, rho)?;
            total_moments.insert(q, m.iter().sum());
            local_moments.insert(q, m);
        }
        Ok(Self {
            e,
            saddle,
            rho,
            local_moments,
            total_moments,
        })
    }
}

/// `E,s,t,rho,I{q}_total...`, one row per energy.
pub fn analytic_table(points: &[SpectralAnalytic], q_list: &[u32]) -> Table {
    let mut headers = vec!["E".to_string(), "s".into(), "t".into(), "rho".into()];
    headers.extend(q_list.iter().map(|q| format!("I{q}_total")));
    let mut table = Table::new(headers);
    for p in points {
        let mut row: Vec<Cell> = vec![p.e.into(), p.saddle.s.into(), p.saddle.t.into(), p.rho.into()];
        row.extend(q_list.iter().map(|q| Cell::from(p.total_moments.get(q).copied().unwrap_or(f64::NAN))));
        table.push(row);
    }
    table
}

/// `i,w,d,I{q}...`, one row per site.
pub fn sites_table(profile: &DiagonalProfile, point: &SpectralAnalytic) -> Table {
    let qs: Vec<u32> = point.local_moments.keys().copied().collect();
    let mut headers = vec!["i".to_string(), "w".into(), "d".into()];
    headers.extend(qs.iter().map(|q| format!("I{q}")));
    let mut table = Table::new(headers);
    for i in 0..profile.n() {
        let mut row: Vec<Cell> = vec![(i + 1).into(), profile.w()[i].into(), profile.d()[i].into()];
        row.extend(qs.iter().map(|q| Cell::from(point.local_moments[q][i])));
        table.push(row);
    }
    table
}

/// Per-profile solutions at one energy and their spread.
#[derive(Debug)]
pub struct BatchSolution {
    pub solutions: Vec<Result<SaddlePoint>>,
    pub mean_s: f64,
    pub mean_t: f64,
    pub std_s: f64,
    pub std_t: f64,
    pub failures: usize,
}

/// Solves every profile at `e` in parallel. Failures are recorded, not fatal;
/// the statistics use the successful solves (sample standard deviation).
pub fn solve_profile_batch(profiles: &[DiagonalProfile], e: f64) -> Result<BatchSolution> {
    if profiles.len() < 2 {
        return Err(Error::Argument("batch needs at least two profiles".into()));
    }
    let solutions: Vec<Result<SaddlePoint>> = profiles
        .par_iter()
        .map(|p| solve_saddle(p, e, None))
        .collect();
    let ok: Vec<&SaddlePoint> = solutions.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = solutions.len() - ok.len();
    if ok.len() < 2 {
        return Err(Error::Numeric(format!(
            "only {} of {} profiles solved at E = {e}",
            ok.len(),
            profiles.len()
        )));
    }
    let stats = |f: &dyn Fn(&SaddlePoint) -> f64| {
        let n = ok.len() as f64;
        let mean = ok.iter().map(|p| f(p)).sum::<f64>() / n;
        let var = ok.iter().map(|p| (f(p) - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    };
    let (mean_s, std_s) = stats(&|p| p.s);
    let (mean_t, std_t) = stats(&|p| p.t);
    Ok(BatchSolution {
        solutions,
        mean_s,
        mean_t,
        std_s,
        std_t,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn prof(w: &[f64], d: &[f64]) -> DiagonalProfile {
        DiagonalProfile::new(w.to_vec(), d.to_vec()).unwrap()
    }

    #[test]
    fn gue_point_has_zero_residual() {
        let p = DiagonalProfile::uniform(5).unwrap();
        let (rt, rs) = residuals(&p, 1.0, 3f64.sqrt() / 2.0, 0.5).unwrap();
        assert!(rt.abs() < 1e-15 && rs.abs() < 1e-15, "{rt} {rs}");
    }

    #[test]
    fn zero_energy_zero_d_is_exact() {
        let p = prof(&[0.3, 2.0, -5.0], &[0.0; 3]);
        let (rt, rs) = residuals(&p, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(rt, 0.0);
        assert!(rs.abs() < 1e-15);
    }

    #[test]
    fn two_site_hand_summation() {
        // w = (1, 2), d = 0, E = 1, s = t = 0.3
        let p = prof(&[1.0, 2.0], &[0.0, 0.0]);
        let (s, t, e) = (0.3, 0.3, 1.0);
        let a1 = e - t;
        let d1 = a1 * a1 + s * s;
        let a2 = e - 4.0 * t;
        let d2 = a2 * a2 + 16.0 * s * s;
        let rt = t - 0.5 * (a1 / d1 + 4.0 * a2 / d2);
        let rs = 1.0 - 0.5 * (1.0 / d1 + 16.0 / d2);
        let (gt, gs) = residuals(&p, e, s, t).unwrap();
        assert!((gt - rt).abs() < 1e-15 && (gs - rs).abs() < 1e-15);
        assert!(gt.abs() > 1e-3 && gs.abs() > 1e-3);
    }

    #[test]
    fn singular_site_is_named() {
        let p = prof(&[1.0, 0.0], &[0.0, 0.5]);
        assert!(matches!(residuals(&p, 0.5, 0.3, 0.1), Err(Error::Singularity { site: 2 })));
        // A w = 0 site away from its energy contributes nothing.
        assert!(residuals(&p, 0.2, 0.5, 0.1).is_ok());
    }

    #[test]
    fn gue_closed_form_recovered() {
        let p = DiagonalProfile::uniform(7).unwrap();
        for k in -19..=19 {
            let e = 0.1 * k as f64;
            let sp = solve_saddle(&p, e, None).unwrap();
            assert!((sp.t - e / 2.0).abs() < 1e-10, "E = {e}");
            assert!((sp.s - (1.0 - e * e / 4.0).sqrt()).abs() < 1e-10, "E = {e}");
            assert!(sp.residual_norm <= TOLERANCE);
        }
        let sp = solve_saddle(&p, 0.0, None).unwrap();
        assert!((dos_analytic(&p, 0.0, &sp).unwrap() - 1.0 / PI).abs() < 1e-14);
        let sp = solve_saddle(&p, 1.0, None).unwrap();
        assert!((dos_analytic(&p, 1.0, &sp).unwrap() - 3f64.sqrt() / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn outside_spectrum_reports_edge() {
        let p = DiagonalProfile::uniform(4).unwrap();
        assert!(matches!(solve_saddle(&p, 2.5, None), Err(Error::SpectralEdge { .. })));
    }

    #[test]
    fn translation_covariance() {
        let p = prof(&[1.0, 0.5, 2.0, 1.5], &[0.1, -0.3, 0.0, 0.2]);
        let c = 0.7;
        let a = solve_saddle(&p, 0.4, None).unwrap();
        let b = solve_saddle(&p.shifted(c), 0.4 + c, None).unwrap();
        assert!((a.t - b.t).abs() < 1e-11 && (a.s - b.s).abs() < 1e-11);
    }

    #[test]
    fn two_site_moments_by_hand() {
        let p = prof(&[1.0, 2.0], &[0.0, 0.0]);
        let sp = solve_saddle(&p, 0.0, None).unwrap();
        assert!((sp.s - 1.0).abs() < 1e-12 && sp.t.abs() < 1e-12);
        let rho = dos_analytic(&p, 0.0, &sp).unwrap();
        assert!((rho - 5.0 / (8.0 * PI)).abs() < 1e-14);
        let i2 = local_moment(&p, 2, 0.0, &sp, rho).unwrap();
        assert!((i2[0] - 32.0 / 25.0).abs() < 1e-12 && (i2[1] - 2.0 / 25.0).abs() < 1e-12);
        let i1 = local_moment(&p, 1, 0.0, &sp, rho).unwrap();
        assert!((i1.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(local_moment(&p, 2, 0.0, &sp, 0.0).is_err());
    }

    #[test]
    fn gue_moments_are_porter_thomas() {
        let n = 10;
        let p = DiagonalProfile::uniform(n).unwrap();
        let a = SpectralAnalytic::compute(&p, 0.7, &[1, 2, 3], None).unwrap();
        for q in 1..=3u32 {
            let expect = factorial(q).unwrap() / (n as f64).powi(q as i32);
            for v in &a.local_moments[&q] {
                assert!((v - expect).abs() < 1e-12 * expect);
            }
        }
    }

    #[test]
    fn inverse_index_profile_solves_and_resolves_in_few_steps() {
        let p = crate::model::build_inverse_index_profile(512).unwrap();
        let sp = solve_saddle(&p, 0.0, None).unwrap();
        assert!(sp.s > 0.0);
        let again = solve_saddle(&p, 0.0, Some((sp.s, sp.t))).unwrap();
        assert!(again.iterations <= 2);
    }

    #[test]
    fn sweep_and_tables() {
        let p = prof(&[1.0, 0.5, 2.0], &[0.0, 0.1, -0.1]);
        let energies = [-0.5, 0.0, 0.5];
        let pts: Vec<SpectralAnalytic> = solve_sweep(&p, &energies)
            .into_iter()
            .map(|r| SpectralAnalytic::from_saddle(&p, r.unwrap(), &[1, 2]).unwrap())
            .collect();
        let t = analytic_table(&pts, &[1, 2]);
        assert_eq!(t.headers, ["E", "s", "t", "rho", "I1_total", "I2_total"]);
        assert_eq!(t.len(), 3);
        let sites = sites_table(&p, &pts[1]);
        assert_eq!(sites.headers, ["i", "w", "d", "I1", "I2"]);
        assert_eq!(sites.rows[2][0], "3");
    }

    #[test]
    fn batch_of_identical_profiles_has_no_spread() {
        let p = prof(&[1.0, 0.5, 2.0], &[0.0; 3]);
        let b = solve_profile_batch(&[p.clone(), p.clone(), p], 0.3).unwrap();
        assert_eq!((b.std_s, b.std_t, b.failures), (0.0, 0.0, 0));
    }
}

//! Complex error functions and integer factorials.
//!
//! The Faddeeva function `w(z) = exp(-z^2) erfc(-iz)` is evaluated in the first
//! quadrant with the region-switching scheme of Poppe and Wijers (ACM TOMS 680):
//! a Maclaurin series close to the origin, Gautschi's combined Taylor /
//! continued-fraction recursion in the intermediate region, and the pure Laplace
//! continued fraction far from the origin. The remaining quadrants follow from
//! `w(-conj z) = conj w(z)` and `w(-z) = 2 exp(-z^2) - w(z)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// 2 / sqrt(pi)
const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Largest argument for which `exp` stays finite.
const EXP_ARG_MAX: f64 = 709.0;

/// Faddeeva function `w(z) = exp(-z^2) erfc(-iz)`.
///
/// Relative accuracy is about 1e-14 in the upper half-plane. In the lower
/// half-plane the function grows like `exp(y^2 - x^2)` and overflows to
/// infinity for large `|Im z|`.
pub fn faddeeva(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    if y >= 0.0 {
        let w = faddeeva_first_quadrant(x.abs(), y);
        if x < 0.0 {
            w.conj()
        } else {
            w
        }
    } else {
        // w(z) = 2 exp(-z^2) - w(-z), with -z in the upper half-plane.
        let w_neg = faddeeva(-z);
        2.0 * (-z * z).exp() - w_neg
    }
}

/// `w(x + iy)` for `x >= 0`, `y >= 0`.
fn faddeeva_first_quadrant(x: f64, y: f64) -> Complex64 {
    let xs = x / 6.3;
    let ys = y / 4.4;
    let mut qrho = xs * xs + ys * ys;

    let xquad = x * x - y * y;
    let yquad = 2.0 * x * y;

    if qrho < 0.085264 {
        // Maclaurin series of erf-like sum, multiplied by exp(-z^2).
        qrho = (1.0 - 0.85 * ys) * qrho.sqrt();
        let n = (6.0 + 72.0 * qrho).round() as i32;
        let mut j = 2 * n + 1;
        let mut xsum = 1.0 / j as f64;
        let mut ysum = 0.0;
        for i in (1..=n).rev() {
            j -= 2;
            let fi = i as f64;
            let xaux = (xsum * xquad - ysum * yquad) / fi;
            ysum = (xsum * yquad + ysum * xquad) / fi;
            xsum = xaux + 1.0 / j as f64;
        }
        let u1 = -TWO_OVER_SQRT_PI * (xsum * y + ysum * x) + 1.0;
        let v1 = TWO_OVER_SQRT_PI * (xsum * x - ysum * y);
        let daux = (-xquad).exp();
        let u2 = daux * yquad.cos();
        let v2 = -daux * yquad.sin();
        return Complex64::new(u1 * u2 - v1 * v2, u1 * v2 + v1 * u2);
    }

    let (h, kapn, nu) = if qrho > 1.0 {
        let q = qrho.sqrt();
        (0.0, 0_i32, (3.0 + 1442.0 / (26.0 * q + 77.0)) as i32)
    } else {
        let q = (1.0 - ys) * (1.0 - qrho).sqrt();
        (
            1.88 * q,
            (7.0 + 34.0 * q).round() as i32,
            (16.0 + 26.0 * q).round() as i32,
        )
    };
    let h2 = 2.0 * h;
    let taylor = h > 0.0;
    let mut qlambda = if taylor { h2.powi(kapn) } else { 0.0 };

    let (mut rx, mut ry, mut sx, mut sy) = (0.0, 0.0, 0.0, 0.0);
    for n in (0..=nu).rev() {
        let np1 = (n + 1) as f64;
        let tx = y + h + np1 * rx;
        let ty = x - np1 * ry;
        let c = 0.5 / (tx * tx + ty * ty);
        rx = c * tx;
        ry = c * ty;
        if taylor && n <= kapn {
            let tx = qlambda + sx;
            sx = rx * tx - ry * sy;
            sy = ry * tx + rx * sy;
            qlambda /= h2;
        }
    }

    let (mut u, v) = if taylor {
        (TWO_OVER_SQRT_PI * sx, TWO_OVER_SQRT_PI * sy)
    } else {
        (TWO_OVER_SQRT_PI * rx, TWO_OVER_SQRT_PI * ry)
    };
    if y == 0.0 {
        u = (-x * x).exp();
    }
    Complex64::new(u, v)
}

/// Maclaurin series `erfi(z) = 2/sqrt(pi) * sum z^(2k+1) / (k! (2k+1))`.
fn erfi_series(z: Complex64) -> Complex64 {
    let z2 = z * z;
    let mut term = z; // z^(2k+1) / k!
    let mut sum = z;
    for k in 1..200 {
        term *= z2 / k as f64;
        let add = term / (2 * k + 1) as f64;
        sum += add;
        if add.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    TWO_OVER_SQRT_PI * sum
}

/// Imaginary error function `erfi(z) = -i erf(iz)` for complex `z`.
///
/// Uses the Maclaurin series for `|z| <= 2` and the Faddeeva function
/// elsewhere. Fails with [`Error::Range`] when `exp(z^2)` overflows.
pub fn erfi(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Argument(format!("erfi of non-finite argument {z}")));
    }
    if z.norm() <= 2.0 {
        return Ok(erfi_series(z));
    }
    // erfi(z) = -i erf(iz) and erf(zeta) = 1 - exp(-zeta^2) w(i zeta) for Re zeta >= 0.
    let zeta = Complex64::i() * z;
    let (zeta, sign) = if zeta.re >= 0.0 {
        (zeta, 1.0)
    } else {
        (-zeta, -1.0)
    };
    let expo = -zeta * zeta;
    if expo.re > EXP_ARG_MAX {
        return Err(Error::Range(format!("erfi({z}) overflows")));
    }
    let erf = 1.0 - expo.exp() * faddeeva(Complex64::i() * zeta);
    Ok(-Complex64::i() * sign * erf)
}

/// `q!` as an exact `f64`; defined for `q <= 20`.
pub fn factorial(q: u32) -> Result<f64> {
    if q > 20 {
        return Err(Error::Argument(format!(
            "factorial only supported up to 20, got {q}"
        )));
    }
    Ok((1..=u64::from(q)).product::<u64>() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    /// Power series of w(z) = sum (iz)^n / Gamma(n/2 + 1); fine for small |z|.
    fn w_series(z: Complex64) -> Complex64 {
        let iz = Complex64::i() * z;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        for n in 0..120 {
            let gamma = gamma_half_plus_one(n);
            sum += pow / gamma;
            pow *= iz;
        }
        sum
    }

    /// Gamma(n/2 + 1) by recursion from Gamma(1) = 1 and Gamma(3/2) = sqrt(pi)/2.
    fn gamma_half_plus_one(n: u32) -> f64 {
        let mut g = if n % 2 == 0 {
            1.0
        } else {
            std::f64::consts::PI.sqrt() / 2.0
        };
        let mut k = if n % 2 == 0 { 1.0 } else { 1.5 };
        while k < n as f64 / 2.0 + 1.0 - 1e-9 {
            g *= k;
            k += 1.0;
        }
        g
    }

    #[test]
    fn faddeeva_at_origin_is_one() {
        let w = faddeeva(Complex64::new(0.0, 0.0));
        assert!((w - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn faddeeva_on_imaginary_axis_is_scaled_erfc() {
        // w(i) = e * erfc(1); erfc(1) from its convergent series 1 - 2/sqrt(pi) sum (-1)^k/(k!(2k+1)).
        let mut erf1 = 0.0;
        let mut fact = 1.0;
        for k in 0..40 {
            if k > 0 {
                fact *= k as f64;
            }
            erf1 += (-1.0f64).powi(k) / (fact * (2 * k + 1) as f64);
        }
        erf1 *= TWO_OVER_SQRT_PI;
        let expected = std::f64::consts::E * (1.0 - erf1);
        let w = faddeeva(Complex64::new(0.0, 1.0));
        assert!((w.re - expected).abs() < 1e-13 * expected, "{w} vs {expected}");
        assert!(w.im.abs() < 1e-16);
        assert!((w.re - 0.427_583_576_155_807).abs() < 1e-12);
    }

    #[test]
    fn faddeeva_matches_power_series_near_origin() {
        for &(x, y) in &[
            (0.3, 0.2),
            (1.0, 0.5),
            (-0.7, 1.1),
            (1.5, 0.0),
            (0.1, 2.0),
            (2.0, 1.0),
        ] {
            let z = Complex64::new(x, y);
            let r = rel(faddeeva(z), w_series(z));
            assert!(r < 1e-12, "z = {z}: rel err {r:e}");
        }
    }

    #[test]
    fn faddeeva_reflection_identities() {
        let pts = [(0.4, 0.9), (3.0, 0.2), (7.5, 4.0), (0.05, 0.01), (5.1, 5.3)];
        for &(x, y) in &pts {
            let z = Complex64::new(x, y);
            let w = faddeeva(z);
            let w_ref = faddeeva(-z.conj());
            assert!(rel(w_ref, w.conj()) < 1e-15);
            // lower half-plane from the defining relation
            let lower = faddeeva(-z);
            let expect = 2.0 * (-z * z).exp() - w;
            assert!(rel(lower, expect) < 1e-13);
        }
    }

    #[test]
    fn erfi_small_values() {
        assert_eq!(erfi(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        let v = erfi(Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.re - 1.650_425_758_797_542_9).abs() < 1e-15);
        assert!(v.im.abs() < 1e-16);
    }

    #[test]
    fn erfi_series_and_faddeeva_routes_agree_on_overlap() {
        for &(x, y) in &[(1.9, 0.5), (0.3, 1.95), (-1.4, 1.3), (1.2, -1.5)] {
            let z = Complex64::new(x, y);
            let zeta = Complex64::i() * z;
            let (zeta, sign) = if zeta.re >= 0.0 { (zeta, 1.0) } else { (-zeta, -1.0) };
            let via_w =
                -Complex64::i() * sign * (1.0 - (-zeta * zeta).exp() * faddeeva(Complex64::i() * zeta));
            assert!(rel(erfi_series(z), via_w) < 1e-13, "z = {z}");
        }
    }

    #[test]
    fn erfi_overflow_is_reported() {
        assert!(matches!(erfi(Complex64::new(40.0, 0.0)), Err(Error::Range(_))));
        assert!(erfi(Complex64::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn factorial_exact_and_bounded() {
        assert_eq!(factorial(0).unwrap(), 1.0);
        assert_eq!(factorial(3).unwrap(), 6.0);
        assert_eq!(factorial(20).unwrap(), 2_432_902_008_176_640_000.0);
        assert!(factorial(21).is_err());
    }
}

//! Faddeeva and erfi against tabulated high-precision values.

use srmt_core::special::{erfi, faddeeva};
use srmt_core::{Complex64, Table};

fn load(name: &str) -> Vec<[f64; 4]> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    let t = Table::read_path(path).unwrap();
    let cols: Vec<Vec<f64>> = t
        .headers
        .iter()
        .map(|h| t.column_f64(h).unwrap())
        .collect();
    (0..t.len())
        .map(|k| [cols[0][k], cols[1][k], cols[2][k], cols[3][k]])
        .collect()
}

#[test]
fn faddeeva_matches_reference_table() {
    let rows = load("faddeeva_reference.csv");
    assert!(rows.len() > 300);
    let mut worst_upper = 0.0_f64;
    let mut worst_lower = 0.0_f64;
    for [x, y, wr, wi] in rows {
        let z = Complex64::new(x, y);
        let expect = Complex64::new(wr, wi);
        let rel = (faddeeva(z) - expect).norm() / expect.norm();
        if y >= 0.0 {
            assert!(z.norm() > 10.0 + 1e-9 || rel <= 1e-12, "w({z}): rel err {rel:e}");
            worst_upper = worst_upper.max(rel);
        } else {
            worst_lower = worst_lower.max(rel);
        }
    }
    assert!(worst_lower <= 1e-10, "lower half-plane rel err {worst_lower:e}");
    eprintln!("faddeeva worst relative error: upper {worst_upper:e}, lower {worst_lower:e}");
}

#[test]
fn erfi_matches_reference_table() {
    let rows = load("erfi_reference.csv");
    assert!(rows.len() > 150);
    for [x, y, er, ei] in rows {
        let z = Complex64::new(x, y);
        let expect = Complex64::new(er, ei);
        let got = erfi(z).unwrap();
        let rel = (got - expect).norm() / expect.norm().max(1e-300);
        assert!(rel <= 1e-11, "erfi({z}) = {got}, expected {expect}: rel err {rel:e}");
    }
}

#[test]
fn erfi_conjugate_symmetry() {
    for &(x, y) in &[(0.3, 0.4), (2.5, -1.0), (-4.0, 3.0), (0.0, 6.0)] {
        let z = Complex64::new(x, y);
        let a = erfi(z.conj()).unwrap();
        let b = erfi(z).unwrap().conj();
        assert!((a - b).norm() <= 1e-14 * b.norm());
    }
}

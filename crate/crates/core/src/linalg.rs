//! Dense Hermitian matrices and their eigendecomposition via LAPACK.
//!
//! The decomposition reduces to real tridiagonal form (`zhetrd`), gets the
//! whole spectrum with `dsterf`, computes only the requested eigenvectors with
//! MRRR (`dstemr`) and maps them back with `zunmtr`. Moment estimators only
//! need the few eigenvectors closest to an energy, so this is much cheaper
//! than a full decomposition.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense `n × n` Hermitian matrix, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    /// From column-major data; checks Hermiticity to 1e-14 (absolute).
    pub fn from_col_major(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                found: data.len(),
            });
        }
        let m = Self { n, data };
        let dev = m.hermiticity_defect();
        if dev > 1e-14 {
            return Err(Error::Argument(format!(
                "matrix is not Hermitian: max |H - H^†| = {dev:e}"
            )));
        }
        Ok(m)
    }

    /// Real symmetric matrix from row-major rows.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                data[i + j * n] = Complex64::new(v, 0.0);
            }
        }
        Self::from_col_major(n, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i + j * self.n]
    }

    /// Sets `(i, j)` and its mirror `(j, i)`; diagonal values must be real.
    pub fn set_pair(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i + j * self.n] = v;
        self.data[j + i * self.n] = v.conj();
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n;
        let mut dev = 0.0_f64;
        for j in 0..n {
            for i in j..n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for (j, &xj) in x.iter().enumerate() {
            let col = &self.data[j * n..(j + 1) * n];
            for (yi, &a) in y.iter_mut().zip(col) {
                *yi += a * xj;
            }
        }
        y
    }
}

/// Eigenvalues and (a contiguous block of) eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// All eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Column-major `n × m` block; column `k` belongs to `values[vector_start + k]`.
    pub vectors: Vec<Complex64>,
    pub vector_start: usize,
    pub n: usize,
}

impl EigenSystem {
    pub fn vector_count(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            self.vectors.len() / self.n
        }
    }

    /// True when every eigenvector is present.
    pub fn is_complete(&self) -> bool {
        self.vector_count() == self.values.len()
    }

    /// Eigenvector of `values[index]`, if it was computed.
    pub fn vector(&self, index: usize) -> Option<&[Complex64]> {
        let k = index.checked_sub(self.vector_start)?;
        (k < self.vector_count()).then(|| &self.vectors[k * self.n..(k + 1) * self.n])
    }

    /// `max |V^† V - I|` over the computed block.
    pub fn orthonormality_defect(&self) -> f64 {
        let m = self.vector_count();
        let n = self.n;
        let mut dev = 0.0_f64;
        for a in 0..m {
            for b in a..m {
                let va = &self.vectors[a * n..(a + 1) * n];
                let vb = &self.vectors[b * n..(b + 1) * n];
                let dot: Complex64 = va.iter().zip(vb).map(|(x, y)| x.conj() * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                dev = dev.max((dot - target).norm());
            }
        }
        dev
    }
}

fn check(routine: &'static str, info: i32) -> Result<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Lapack { routine, info })
    }
}

/// Householder reduction to real tridiagonal form; overwrites `a`.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    tau: Vec<Complex64>,
}

fn tridiagonalize(a: &mut [Complex64], n: usize) -> Result<Tridiagonal> {
    let ni = n as i32;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1).max(1)];
    let mut tau = vec![Complex64::new(0.0, 0.0); n.saturating_sub(1).max(1)];
    let mut query = [Complex64::new(0.0, 0.0)];
    let mut info = 0;
    unsafe {
        lapack::zhetrd(b'L', ni, a, ni, &mut diag, &mut off, &mut tau, &mut query, -1, &mut info);
    }
    check("zhetrd", info)?;
    let lwork = (query[0].re as usize).max(1);
    let mut work = vec![Complex64::new(0.0, 0.0); lwork];
    unsafe {
        lapack::zhetrd(b'L', ni, a, ni, &mut diag, &mut off, &mut tau, &mut work, lwork as i32, &mut info);
    }
    check("zhetrd", info)?;
    Ok(Tridiagonal { diag, off, tau })
}

fn tridiagonal_values(t: &Tridiagonal) -> Result<Vec<f64>> {
    let n = t.diag.len();
    let mut d = t.diag.clone();
    let mut e = t.off.clone();
    let mut info = 0;
    unsafe {
        lapack::dsterf(n as i32, &mut d, &mut e, &mut info);
    }
    check("dsterf", info)?;
    Ok(d)
}

/// All eigenvalues, ascending.
pub fn eigenvalues(h: &HermitianMatrix) -> Result<Vec<f64>> {
    let n = h.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = h.as_slice().to_vec();
    let t = tridiagonalize(&mut a, n)?;
    tridiagonal_values(&t)
}

/// All eigenvalues plus the eigenvectors with (0-based, inclusive) indices
/// `lo..=hi`.
pub fn eig_hermitian_range(h: &HermitianMatrix, lo: usize, hi: usize) -> Result<EigenSystem> {
    let n = h.n();
    if n == 0 || lo > hi || hi >= n {
        return Err(Error::Argument(format!(
            "eigenvector range {lo}..={hi} invalid for n = {n}"
        )));
    }
    h.eigen_inner(|_| Ok(Some((lo, hi))))
}

/// All eigenvalues plus the eigenvectors of the contiguous index block chosen
/// by `select` from the ascending spectrum (none if it returns `None`).
pub fn eig_hermitian_select(
    h: &HermitianMatrix,
    select: impl FnOnce(&[f64]) -> Result<Option<(usize, usize)>>,
) -> Result<EigenSystem> {
    if h.n() == 0 {
        return Err(Error::Argument("empty matrix".into()));
    }
    h.eigen_inner(select)
}

/// Full decomposition.
pub fn eig_hermitian(h: &HermitianMatrix) -> Result<EigenSystem> {
    if h.n() == 0 {
        return Err(Error::Argument("empty matrix".into()));
    }
    eig_hermitian_range(h, 0, h.n() - 1)
}

impl HermitianMatrix {
    fn eigen_inner(
        &self,
        select: impl FnOnce(&[f64]) -> Result<Option<(usize, usize)>>,
    ) -> Result<EigenSystem> {
        let n = self.n;
        let ni = n as i32;
        let mut a = self.data.clone();
        let t = tridiagonalize(&mut a, n)?;
        let values = tridiagonal_values(&t)?;
        let Some((lo, hi)) = select(&values)? else {
            return Ok(EigenSystem {
                values,
                vectors: Vec::new(),
                vector_start: 0,
                n,
            });
        };
        if lo > hi || hi >= n {
            return Err(Error::Argument(format!(
                "eigenvector range {lo}..={hi} invalid for n = {n}"
            )));
        }

        // Selected eigenvectors of the tridiagonal matrix.
        let m_req = hi - lo + 1;
        let mut d = t.diag.clone();
        let mut e = vec![0.0; n];
        e[..n - 1].copy_from_slice(&t.off[..n - 1]);
        let mut m = 0;
        let mut w = vec![0.0; n];
        let mut z = vec![0.0; n * m_req];
        let mut isuppz = vec![0; 2 * m_req];
        let mut tryrac = 1;
        let mut info = 0;
        let mut wq = [0.0];
        let mut iwq = [0];
        let nzc = [m_req as i32];
        unsafe {
            lapack::dstemr(
                b'V', b'I', ni, &mut d, &mut e, 0.0, 0.0, lo as i32 + 1, hi as i32 + 1, &mut m,
                &mut w, &mut z, ni, &nzc, &mut isuppz, &mut tryrac, &mut wq, -1, &mut iwq, -1,
                &mut info,
            );
        }
        check("dstemr", info)?;
        let lwork = wq[0] as usize;
        let liwork = iwq[0] as usize;
        let mut work = vec![0.0; lwork.max(1)];
        let mut iwork = vec![0; liwork.max(1)];
        unsafe {
            lapack::dstemr(
                b'V', b'I', ni, &mut d, &mut e, 0.0, 0.0, lo as i32 + 1, hi as i32 + 1, &mut m,
                &mut w, &mut z, ni, &nzc, &mut isuppz, &mut tryrac, &mut work, lwork as i32,
                &mut iwork, liwork as i32, &mut info,
            );
        }
        check("dstemr", info)?;
        if m as usize != m_req {
            return Err(Error::Numeric(format!(
                "dstemr returned {m} eigenvectors, expected {m_req}"
            )));
        }

        // Back-transform Q · Z.
        let mut c: Vec<Complex64> = z.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut query = [Complex64::new(0.0, 0.0)];
        let mi = m_req as i32;
        unsafe {
            lapack::zunmtr(b'L', b'L', b'N', ni, mi, &a, ni, &t.tau, &mut c, ni, &mut query, -1, &mut info);
        }
        check("zunmtr", info)?;
        let lwork = (query[0].re as usize).max(1);
        let mut work = vec![Complex64::new(0.0, 0.0); lwork];
        unsafe {
            lapack::zunmtr(
                b'L', b'L', b'N', ni, mi, &a, ni, &t.tau, &mut c, ni, &mut work, lwork as i32,
                &mut info,
            );
        }
        check("zunmtr", info)?;

        Ok(EigenSystem {
            values,
            vectors: c,
            vector_start: lo,
            n,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut h = HermitianMatrix::zeros(n);
        for j in 0..n {
            h.set_pair(j, j, Complex64::new(rng.gen_range(-1.0..1.0), 0.0));
            for i in j + 1..n {
                h.set_pair(i, j, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        h
    }

    #[test]
    fn diagonal_matrix() {
        let h = HermitianMatrix::from_real_rows(&[&[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 3.0]])
            .unwrap();
        let es = eig_hermitian(&h).unwrap();
        for (v, e) in es.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-15);
        }
        // eigenvector of 1 is e_2 up to phase
        let v = es.vector(0).unwrap();
        assert!((v[1].norm() - 1.0).abs() < 1e-14 && v[0].norm() < 1e-14);
    }

    #[test]
    fn pauli_x() {
        let h = HermitianMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let vals = eigenvalues(&h).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_of_random_matrix() {
        let n = 50;
        let h = random_hermitian(n, 3);
        let es = eig_hermitian(&h).unwrap();
        assert!(es.is_complete());
        assert!(es.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(es.orthonormality_defect() < 1e-12);
        let mut max_dev = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let v = es.vector(k).unwrap();
                    acc += v[i] * es.values[k] * v[j].conj();
                }
                max_dev = max_dev.max((acc - h.get(i, j)).norm());
            }
        }
        assert!(max_dev < 1e-10, "reconstruction error {max_dev:e}");
    }

    #[test]
    fn partial_block_matches_full() {
        let n = 80;
        let h = random_hermitian(n, 11);
        let full = eigenvalues(&h).unwrap();
        let part = eig_hermitian_range(&h, 30, 39).unwrap();
        assert_eq!(part.vector_count(), 10);
        assert!(part.vector(29).is_none() && part.vector(40).is_none());
        for (a, b) in full.iter().zip(&part.values) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(part.orthonormality_defect() < 1e-12);
        for k in 30..40 {
            let v = part.vector(k).unwrap();
            let hv = h.mul_vec(v);
            let res = hv
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b * part.values[k]).norm())
                .fold(0.0, f64::max);
            assert!(res < 1e-10 * h.max_abs() * n as f64);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let bad = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)];
        assert!(HermitianMatrix::from_col_major(2, bad).is_err());
        let h = HermitianMatrix::zeros(3);
        assert!(eig_hermitian_range(&h, 2, 3).is_err());
    }
}

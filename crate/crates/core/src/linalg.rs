//! Dense complex linear algebra shared by the channel, capacity and SIC code.
//!
//! Everything here is a thin layer over `nalgebra`: Hermitian eigenvalues with
//! explicit symmetrization, PSD square roots and singular values.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Negative eigenvalues above this magnitude are treated as a real PSD violation.
pub const NEGATIVE_EIGENVALUE_CLIP: f64 = 1e-10;

/// `(A + A^H) / 2`.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Largest entrywise deviation `|a_ij - conj(a_ji)|`.
pub fn hermitian_asymmetry(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of the Hermitian part of `a`, sorted descending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    vals
}

/// Eigen-decomposition of the Hermitian part of `a` (eigenvalues unsorted,
/// columns of the returned matrix are the matching eigenvectors).
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(symmetrize(a));
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Hermitian PSD square root. Eigenvalues in `[-tol, 0)` are clipped to zero;
/// anything more negative is an error.
pub fn psd_sqrt(a: &CMatrix, tol: f64) -> Result<CMatrix> {
    let n = a.nrows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    if is_diagonal(a) {
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            let v = a[(i, i)].re;
            if v < -tol {
                return Err(Error::NotPsd { min_eigenvalue: v });
            }
            out[(i, i)] = Complex64::new(v.max(0.0).sqrt(), 0.0);
        }
        return Ok(out);
    }
    let (vals, vecs) = hermitian_eigen(a);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(&scaled * vecs.adjoint())
}

pub fn is_diagonal(a: &CMatrix) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.nrows();
    for j in 0..n {
        for i in 0..n {
            if i != j && a[(i, j)] != Complex64::new(0.0, 0.0) {
                return false;
            }
        }
    }
    true
}

/// Singular values, sorted descending.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn max_singular_value(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Sum of squared moduli of all entries.
pub fn frobenius_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn trace_re(a: &CMatrix) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

/// `log det(I + gamma * A A^H)` through a Cholesky factor, independent of any
/// eigen-decomposition.
pub fn log_det_identity_plus(a: &CMatrix, gamma: f64) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut m = (a * a.adjoint()).scale(gamma);
    for i in 0..n {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let m = symmetrize(&m);
    let chol = nalgebra::Cholesky::new(m).expect("I + gamma A A^H is positive definite");
    let l = chol.l();
    (0..n).map(|i| 2.0 * l[(i, i)].re.ln()).sum()
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

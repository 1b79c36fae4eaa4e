//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn scalar(v: C64) -> CMat {
    CMat::from_element(1, 1, v)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return vec![m[(0, 0)].norm()];
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return vec![m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()];
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value (induced 2-norm).
pub fn sigma_max(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest of the `min(rows, cols)` singular values.
pub fn sigma_min(m: &CMat) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

pub fn det(m: &CMat) -> C64 {
    match m.nrows() {
        0 => ONE,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().lu().determinant(),
    }
}

/// Inverse with a conditioning guard; `what` names the matrix in errors.
pub fn inverse(m: &CMat, what: &str) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(format!("{what} is not square")));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    if n == 1 {
        let v = m[(0, 0)];
        if v.norm() == 0.0 || !v.is_finite() {
            return Err(Error::SingularResolvent(what.to_string()));
        }
        return Ok(scalar(v.inv()));
    }
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularResolvent(what.to_string()))?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularResolvent(what.to_string()));
    }
    Ok(inv)
}

/// Solve `m x = rhs`.
pub fn solve(m: &CMat, rhs: &CMat, what: &str) -> Result<CMat> {
    let n = m.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, rhs.ncols()));
    }
    let lu = m.clone().lu();
    let x = lu
        .solve(rhs)
        .ok_or_else(|| Error::SingularResolvent(what.to_string()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularResolvent(what.to_string()));
    }
    Ok(x)
}

/// Inverse square root of a Hermitian positive definite matrix.
pub fn hermitian_inv_sqrt(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut d = CMat::zeros(n, n);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.is_nan() || lam <= 0.0 {
            return Err(Error::Factorization(format!(
                "matrix expected positive definite has eigenvalue {lam:e}"
            )));
        }
        d[(k, k)] = c(1.0 / lam.sqrt(), 0.0);
    }
    let v = &eig.eigenvectors;
    Ok(v * d * v.adjoint())
}

pub fn eigenvalues(m: &CMat) -> Vec<C64> {
    match m.nrows() {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        _ => nalgebra::linalg::Schur::new(m.clone())
            .eigenvalues()
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default(),
    }
}

pub fn spectral_radius(m: &CMat) -> f64 {
    eigenvalues(m).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Max-abs entry norm, used for convergence tests.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn vstack(top: &CMat, bottom: &CMat) -> CMat {
    assert_eq!(top.ncols(), bottom.ncols());
    let mut out = CMat::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

pub fn hstack(left: &CMat, right: &CMat) -> CMat {
    assert_eq!(left.nrows(), right.nrows());
    let mut out = CMat::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    out
}

/// Block-diagonal concatenation.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Orthonormal basis of the column space, rank decided relative to the top singular value.
pub fn column_space(m: &CMat, rel_tol: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = &svd.singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] > rel_tol * top && top > 0.0).collect();
    let mut out = CMat::zeros(m.nrows(), keep.len());
    for (j, &k) in keep.iter().enumerate() {
        out.set_column(j, &u.column(k));
    }
    out
}

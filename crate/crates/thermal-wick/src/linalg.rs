//! Dense complex linear algebra helpers shared across the crate.
//!
//! Everything here works on `nalgebra` dynamic matrices over `Complex64`.
//! Matrix functions of Hermitian matrices always go through a full
//! eigendecomposition, never through series approximations, so that
//! complex-time arguments stay exact.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// `(m + m†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Relative deviation of `m` from its Hermitian part.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let scale = m.norm().max(1e-300);
    (m - m.adjoint()).norm() / scale
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized before factorization; callers are expected to
/// have checked Hermiticity already.
pub struct HermitianEig {
    pub values: DVector<f64>,
    pub vectors: CMat,
}

pub fn eigh(m: &CMat) -> HermitianEig {
    let se = hermitian_part(m).symmetric_eigen();
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| se.eigenvalues[k]));
    let vectors = CMat::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    HermitianEig { values, vectors }
}

/// Apply a scalar function to a Hermitian matrix through its spectrum:
/// `f(m) = V diag(f(e)) V†`.
pub fn hermitian_fn(m: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let eig = eigh(m);
    let d = CMat::from_diagonal(&eig.values.map(f));
    &eig.vectors * d * eig.vectors.adjoint()
}

/// Orthonormal basis of `{x : a x = 0}` as matrix columns, computed from the
/// eigendecomposition of `a† a`.
///
/// Directions with `a†a`-eigenvalue at most `max(1e-14 * lambda_max, 1e-28)`
/// count as null. Works for any rectangular `a`, including the degenerate
/// all-zero case.
pub fn null_space(a: &CMat) -> CMat {
    let n = a.ncols();
    let gram = a.adjoint() * a;
    let eig = eigh(&gram);
    let lmax = eig.values.iter().cloned().fold(0.0f64, f64::max);
    let tol = (1e-14 * lmax).max(1e-28);
    let kept: Vec<usize> = (0..n).filter(|&k| eig.values[k] <= tol).collect();
    let mut out = CMat::zeros(n, kept.len());
    for (c, &k) in kept.iter().enumerate() {
        out.set_column(c, &eig.vectors.column(k));
    }
    out
}

/// Residual of `v` against the column span of `basis` (columns need not be
/// orthonormal but must be independent), normalized by `‖v‖`.
pub fn span_residual(basis: &CMat, v: &CVec) -> f64 {
    let vn = v.norm();
    if vn == 0.0 {
        return 0.0;
    }
    let gram = basis.adjoint() * basis;
    let rhs = basis.adjoint() * v;
    match gram.lu().solve(&rhs) {
        Some(c) => (v - basis * c).norm() / vn,
        None => 1.0,
    }
}

/// Standard sesquilinear pairing `sum_k x_k conj(y_k)`, linear in the first
/// argument. This is the convention used for all reconstructed inner
/// products in the crate.
pub fn pairing(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

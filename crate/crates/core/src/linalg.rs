//! Small dense helpers over mode Gram matrices.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::modes::{mode_overlap, ModeLabel, C64};

/// `G_ij = ⟨m_i, m_j⟩`
pub fn gram_matrix(labels: &[ModeLabel]) -> Result<DMatrix<C64>> {
    let n = labels.len();
    let mut g = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        for j in i..n {
            let v = mode_overlap(&labels[i], &labels[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    Ok(g)
}

/// Cross-overlap matrix `X_ij = ⟨a_i, b_j⟩`.
pub fn overlap_matrix(a: &[ModeLabel], b: &[ModeLabel]) -> Result<DMatrix<C64>> {
    let mut x = DMatrix::from_element(a.len(), b.len(), C64::new(0.0, 0.0));
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            x[(i, j)] = mode_overlap(ai, bj)?;
        }
    }
    Ok(x)
}

fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Moore–Penrose inverse of a Hermitian PSD matrix; eigenvalues at or below
/// `tol` are treated as zero.
pub fn hermitian_pinv(m: &DMatrix<C64>, tol: f64) -> DMatrix<C64> {
    let n = m.nrows();
    if n == 0 {
        return m.clone();
    }
    let eig = hermitian_part(m).symmetric_eigen();
    let mut out = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= tol {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        out += (v * v.adjoint()) * C64::new(1.0 / lambda, 0.0);
    }
    out
}

/// Largest `|a_ij − b_ij|` together with its position.
pub fn max_abs_deviation(a: &DMatrix<C64>, b: &DMatrix<C64>) -> (f64, usize, usize) {
    let mut worst = (0.0, 0, 0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let d = (a[(i, j)] - b[(i, j)]).norm();
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    worst
}

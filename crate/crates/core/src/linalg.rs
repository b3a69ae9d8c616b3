//! Thin wrappers over dense complex linear algebra (SVD, nonsymmetric
//! eigendecomposition, least squares) with errors mapped into [`crate::Error`].

use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Inverse, LeastSquaresSvd, UPLO, SVD};
use num_complex::Complex64;

/// Minimum-norm least-squares solution together with the effective rank and
/// singular values reported by the SVD driver.
pub struct Lstsq {
    pub solution: Array1<Complex64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

pub fn lstsq(a: &Array2<Complex64>, b: &Array1<Complex64>) -> Result<Lstsq> {
    if a.nrows() != b.len() {
        return Err(Error::Linalg(format!(
            "least squares shape mismatch: {} rows vs rhs length {}",
            a.nrows(),
            b.len()
        )));
    }
    let out = a
        .least_squares(b)
        .map_err(|e| Error::Linalg(format!("least squares failed: {e}")))?;
    Ok(Lstsq {
        solution: out.solution,
        rank: out.rank.max(0) as usize,
        singular_values: out.singular_values.to_vec(),
    })
}

/// Full SVD A = U diag(s) Vᴴ; returns (U, s, Vᴴ).
pub fn svd(a: &Array2<Complex64>) -> Result<(Array2<Complex64>, Vec<f64>, Array2<Complex64>)> {
    let (u, s, vt) = a
        .svd(true, true)
        .map_err(|e| Error::Linalg(format!("SVD failed: {e}")))?;
    Ok((
        u.expect("left singular vectors requested"),
        s.to_vec(),
        vt.expect("right singular vectors requested"),
    ))
}

/// Singular values only.
pub fn singular_values(a: &Array2<Complex64>) -> Result<Vec<f64>> {
    let (_, s, _) = a
        .svd(false, false)
        .map_err(|e| Error::Linalg(format!("SVD failed: {e}")))?;
    Ok(s.to_vec())
}

/// Eigenvalues and right eigenvectors of a general complex square matrix
/// (columns of the returned matrix are the eigenvectors).
pub fn eig(a: &Array2<Complex64>) -> Result<(Array1<Complex64>, Array2<Complex64>)> {
    a.eig()
        .map_err(|e| Error::Linalg(format!("eigendecomposition failed: {e}")))
}

/// Real eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian
/// matrix.
pub fn eigh(a: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    // Pin the layout: on row-major input the backend effectively diagonalizes
    // the transpose conj(A), so its columns come back conjugated; undo that so
    // the columns satisfy A v_k = lambda_k v_k literally.
    let a_std: Array2<Complex64> = a.as_standard_layout().into_owned();
    let (vals, vecs) = a_std
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Linalg(format!("Hermitian eigendecomposition failed: {e}")))?;
    Ok((vals.to_vec(), vecs.mapv(|z| z.conj())))
}

pub fn inv(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    a.inv()
        .map_err(|e| Error::Linalg(format!("matrix inversion failed: {e}")))
}

//! Complex-to-real lifting and Hermitian square roots.
//!
//! A complex `n`-vector `z` is stacked as the real `2n`-vector
//! `[Re z; Im z]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{CMatrix, CVector, Error, Result, C64};

/// `[Re z; Im z]`.
pub fn complex_to_real(z: &CVector) -> DVector<f64> {
    let n = z.len();
    DVector::from_fn(2 * n, |i, _| if i < n { z[i].re } else { z[i - n].im })
}

/// Inverse of [`complex_to_real`]. Panics on odd length.
pub fn real_to_complex(x: &DVector<f64>) -> CVector {
    assert!(x.len() % 2 == 0, "stacked real vector must have even length");
    let n = x.len() / 2;
    CVector::from_fn(n, |i, _| C64::new(x[i], x[i + n]))
}

/// Real `2r x 2n` matrix of the map `z -> R z` in stacked coordinates.
pub fn realify_matrix(r: &CMatrix) -> DMatrix<f64> {
    let (rows, cols) = r.shape();
    DMatrix::from_fn(2 * rows, 2 * cols, |i, j| {
        let z = r[(i % rows, j % cols)];
        match (i < rows, j < cols) {
            (true, true) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
            (false, false) => z.re,
        }
    })
}

/// Real row `a` with `a . [Re z; Im z] = Re{c^H z}`.
pub fn realify_re_inner(c: &CVector) -> DVector<f64> {
    complex_to_real(c)
}

/// Square-root factor `R` of a Hermitian PSD matrix, `R^H R = S`.
///
/// Computed from the eigendecomposition `S = V diag(l) V^H` as the rows
/// `sqrt(l_i) v_i^H`. Eigenvalues in `[-eps * max(1, l_max), 0)` are clamped
/// to zero; smaller ones fail with [`Error::NotPsd`]. Rows whose eigenvalue
/// is at roundoff level (`<= n * 2^-52 * l_max`) are dropped, so `R` has as
/// many rows as the numerical rank of `S`.
pub fn psd_sqrt(s: &CMatrix, eps: f64) -> Result<CMatrix> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::Dimension(format!("psd_sqrt needs a square matrix, got {:?}", s.shape())));
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let asym = s.iter().zip(s.adjoint().iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if asym > 1e-10 * scale {
        return Err(Error::Domain(format!("matrix is not Hermitian (asymmetry {asym:e})")));
    }
    let herm = (s + s.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(herm);
    let l_max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let l_min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let floor = eps * l_max.max(1.0);
    if l_min < -floor {
        return Err(Error::NotPsd {
            min_eigenvalue: l_min,
            eps: floor,
        });
    }
    let cutoff = n as f64 * f64::EPSILON * l_max;
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > cutoff).collect();
    let mut r = CMatrix::zeros(keep.len(), n);
    for (row, &i) in keep.iter().enumerate() {
        let sq = eig.eigenvalues[i].sqrt();
        for j in 0..n {
            r[(row, j)] = eig.eigenvectors[(j, i)].conj() * sq;
        }
    }
    Ok(r)
}

//! Dense linear-algebra helpers shared by the spectral and adiabatic layers.

use crate::error::{Error, Result};
use crate::C64;
use faer::linalg::solvers::Eigen;
use nalgebra::{DMatrix, DVector};

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigenvalues and right eigenvectors (as columns) of a general square matrix.
///
/// Matrices whose entries are all real go through the real Hessenberg-Schur
/// path, which is several times faster.
pub fn eig(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    let real = a.iter().all(|z| z.im == 0.0);
    let evd = if real {
        let m = faer::Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)].re);
        Eigen::new_from_real(m.as_ref())
    } else {
        let m = faer::Mat::<C64>::from_fn(n, n, |i, j| a[(i, j)]);
        Eigen::new(m.as_ref())
    }
    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..n).map(|i| s[i]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((values, vectors))
}

/// Nearest unitary matrix in the Frobenius norm (the unitary polar factor).
pub fn polar_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    u * v_t
}

/// exp(i s A) for Hermitian A, via its eigendecomposition.
pub fn expm_i_hermitian(a: &CMat, s: f64) -> CMat {
    let herm = (a + a.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::new(0.0, s * l).exp()),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// Half-bandwidth: the largest |i - j| over non-zero entries.
pub fn bandwidth(m: &CMat) -> usize {
    let mut b = 0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != C64::new(0.0, 0.0) {
                b = b.max(i.abs_diff(j));
            }
        }
    }
    b
}

/// y = M x restricted to the band |i - j| <= b.
pub fn banded_matvec(m: &CMat, b: usize, x: &[C64], y: &mut [C64]) {
    let n = m.nrows();
    for (i, yi) in y.iter_mut().enumerate().take(n) {
        let lo = i.saturating_sub(b);
        let hi = (i + b + 1).min(m.ncols());
        let mut acc = C64::new(0.0, 0.0);
        for j in lo..hi {
            acc += m[(i, j)] * x[j];
        }
        *yi = acc;
    }
}

/// Largest deviation of a matrix from the identity.
pub fn identity_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            d = d.max((m[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_reconstructs_real_and_complex() {
        let a = CMat::from_fn(5, 5, |i, j| C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, 0.0));
        let b = CMat::from_fn(5, 5, |i, j| C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, (i as f64 - j as f64) * 0.3));
        for m in [a, b] {
            let (vals, vecs) = eig(&m).unwrap();
            for k in 0..5 {
                let v = vecs.column(k);
                let r = &m * v - v * vals[k];
                assert!(r.norm() < 1e-10 * v.norm());
            }
        }
    }

    #[test]
    fn polar_of_scaled_unitary() {
        let u = expm_i_hermitian(&CMat::from_fn(3, 3, |i, j| C64::new((i + j) as f64, i as f64 - j as f64)), 0.7);
        assert!(identity_deviation(&(u.adjoint() * &u)) < 1e-13);
        let p = polar_unitary(&(&u * C64::new(2.5, 0.0)));
        assert!((p - u).norm() < 1e-12);
    }

    #[test]
    fn banded_matches_dense() {
        let m = CMat::from_fn(6, 6, |i, j| if i.abs_diff(j) <= 1 { C64::new(i as f64 + 1.0, j as f64) } else { C64::new(0.0, 0.0) });
        assert_eq!(bandwidth(&m), 1);
        let x: Vec<C64> = (0..6).map(|k| C64::new(k as f64, 1.0)).collect();
        let mut y = vec![C64::new(0.0, 0.0); 6];
        banded_matvec(&m, 1, &x, &mut y);
        let dense = &m * CVec::from_vec(x);
        assert!((CVec::from_vec(y) - dense).norm() < 1e-14);
    }
}

//! Small dense linear algebra helpers shared across modules.
//!
//! Everything here operates on symmetric matrices of the ambient data
//! dimension (single digits in practice), so simplicity and numerical
//! robustness win over asymptotic speed.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{FgsError, Result};

/// Eigenvalues below this fraction of the largest are clamped to zero
/// when taking matrix square roots, guarding against negative roundoff.
const PSD_EIG_FLOOR_REL: f64 = 1e-14;

/// Symmetrizes in place: (A + A^T) / 2. Cheap insurance before
/// eigendecomposition of matrices assembled from products.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let at = a.transpose();
    *a += at;
    *a *= 0.5;
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Applies `f` to the eigenvalues of symmetric `a`: V f(Λ) V^T.
/// Small negative eigenvalues from roundoff are clamped to zero first.
pub fn sym_func(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(a);
    let max = vals.iter().cloned().fold(0.0_f64, f64::max);
    let floor = max * PSD_EIG_FLOOR_REL;
    let mapped = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| f(if v < floor { 0.0 } else { v })),
    );
    let mut out = &vecs * DMatrix::from_diagonal(&mapped) * vecs.transpose();
    symmetrize(&mut out);
    out
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrtm_psd(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_func(a, f64::sqrt)
}

/// Inverse principal square root of a positive definite matrix.
/// Fails if the smallest eigenvalue is not safely positive.
pub fn inv_sqrtm_pd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(a);
    let min = vals[0];
    let max = vals[vals.len() - 1];
    if min <= 0.0 || min < max * 1e-15 {
        return Err(FgsError::Numerical(format!(
            "matrix not positive definite: eigenvalue range [{min:.3e}, {max:.3e}]"
        )));
    }
    let mapped = DVector::from_iterator(vals.len(), vals.iter().map(|&v| 1.0 / v.sqrt()));
    let mut out = &vecs * DMatrix::from_diagonal(&mapped) * vecs.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// Inverse of a symmetric positive definite matrix via eigendecomposition.
pub fn inv_pd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(a);
    let min = vals[0];
    let max = vals[vals.len() - 1];
    if min <= 0.0 || min < max * 1e-15 {
        return Err(FgsError::Numerical(format!(
            "matrix not positive definite: eigenvalue range [{min:.3e}, {max:.3e}]"
        )));
    }
    let mapped = DVector::from_iterator(vals.len(), vals.iter().map(|&v| 1.0 / v));
    let mut out = &vecs * DMatrix::from_diagonal(&mapped) * vecs.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// Spectral condition number of a symmetric PSD matrix; infinite when
/// the smallest eigenvalue is zero or negative.
pub fn sym_condition(a: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen(a);
    let min = vals[0];
    let max = vals[vals.len() - 1];
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Lower quantile of the standard normal, e.g. `normal_quantile(0.975)`
/// for a two-sided 95% interval.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) || p <= 0.0 {
        return Err(FgsError::InvalidConfig(format!(
            "normal quantile requires p in (0,1), got {p}"
        )));
    }
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal is valid");
    Ok(std_normal.inverse_cdf(p))
}

/// Least-squares solution of `a x = b` via QR with column pivoting
/// falling back to SVD when rank-deficient.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-12)
        .map_err(|e| FgsError::Numerical(format!("least squares failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_psd(d: usize, seed: u64) -> DMatrix<f64> {
        // Deterministic pseudo-random PSD matrix: A = B B^T + eps I.
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        let b = DMatrix::from_fn(d, d, |_, _| next());
        &b * b.transpose() + DMatrix::identity(d, d) * 0.05
    }

    #[test]
    fn sqrt_squares_back() {
        for seed in 0..5 {
            for d in [1usize, 2, 3, 5] {
                let a = random_psd(d, seed * 31 + d as u64);
                let r = sqrtm_psd(&a);
                let back = &r * &r;
                for i in 0..d {
                    for j in 0..d {
                        assert_abs_diff_eq!(back[(i, j)], a[(i, j)], epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn inv_sqrt_inverts() {
        let a = random_psd(4, 7);
        let s = inv_sqrtm_pd(&a).unwrap();
        let prod = &s * &a * &s;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)], want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn sqrt_of_diagonal_is_elementwise() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 9.0, 0.25]));
        let r = sqrtm_psd(&a);
        assert_abs_diff_eq!(r[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(1, 1)], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(2, 2)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quantiles_match_known_values() {
        // Reference values from standard normal tables.
        assert_abs_diff_eq!(normal_quantile(0.975).unwrap(), 1.959964, epsilon = 1e-5);
        assert_abs_diff_eq!(normal_quantile(0.95).unwrap(), 1.644854, epsilon = 1e-5);
        assert_abs_diff_eq!(normal_quantile(0.5).unwrap(), 0.0, epsilon = 1e-12);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let x_true = DVector::from_vec(vec![0.5, -2.0]);
        let b = &a * &x_true;
        let x = least_squares(&a, &b).unwrap();
        assert_abs_diff_eq!(x[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], -2.0, epsilon = 1e-10);
    }

    #[test]
    fn condition_number_of_identity_is_one() {
        let a = DMatrix::<f64>::identity(3, 3);
        assert_abs_diff_eq!(sym_condition(&a), 1.0, epsilon = 1e-12);
    }
}

//! Thin ndarray-facing wrappers around nalgebra's dense factorizations.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView2};

use crate::{Error, Result};

pub fn to_na(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: ArrayView2<'_, f64>) -> Array1<f64> {
    let eig = to_na(a).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Array1::from_vec(vals)
}

pub fn min_eig_sym(a: ArrayView2<'_, f64>) -> f64 {
    to_na(a)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Eigendecomposition of a symmetric matrix with eigenvalues ascending;
/// eigenvectors are returned as columns in the matching order.
pub fn sym_eigen_sorted(a: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let eig = to_na(a).symmetric_eigen();
    let p = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let vecs = Array2::from_shape_fn((p, p), |(i, j)| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Symmetric square root of a positive semi-definite matrix.
///
/// Uses the eigendecomposition rather than Cholesky so the root is symmetric
/// and stable under eigenvalue ties. Eigenvalues below `-tol` are rejected;
/// tiny negative values from roundoff are clamped to zero.
pub fn sqrt_spd(a: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let (vals, vecs) = sym_eigen_sorted(a);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-10 * scale;
    if vals[0] < -tol {
        return Err(Error::InvalidArgument(format!(
            "matrix is not positive semi-definite (min eigenvalue {:e})",
            vals[0]
        )));
    }
    let p = vals.len();
    let mut root = Array2::zeros((p, p));
    for k in 0..p {
        let lk = vals[k].max(0.0).sqrt();
        for i in 0..p {
            for j in 0..p {
                root[[i, j]] += lk * vecs[[i, k]] * vecs[[j, k]];
            }
        }
    }
    Ok(root)
}

/// Solves A·x = b for symmetric positive-definite A via Cholesky.
pub fn solve_spd(a: ArrayView2<'_, f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let chol = to_na(a)
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("Cholesky factorization failed".into()))?;
    let rhs = DVector::from_iterator(b.len(), b.iter().copied());
    let sol = chol.solve(&rhs);
    Ok(Array1::from_iter(sol.iter().copied()))
}

/// Solves A·X = B columnwise for symmetric positive-definite A.
pub fn solve_spd_multi(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let chol = to_na(a)
        .cholesky()
        .ok_or_else(|| Error::SingularMatrix("Cholesky factorization failed".into()))?;
    let sol = chol.solve(&to_na(b));
    Ok(from_na(&sol))
}

/// Largest singular value of a rectangular matrix.
pub fn max_singular_value(a: ArrayView2<'_, f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    // Work with the smaller Gram block; its top eigenvalue is sigma_max^2.
    let gram = if a.nrows() <= a.ncols() {
        a.dot(&a.t())
    } else {
        a.t().dot(&a)
    };
    let top = sym_eigenvalues(gram.view());
    top[top.len() - 1].max(0.0).sqrt()
}

/// Binomial coefficient with saturation, for enumeration-cap checks.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > u128::MAX / 2 {
            return u128::MAX;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    #[test]
    fn sqrt_spd_squares_back() {
        let a = arr2(&[[2.0, 0.5], [0.5, 1.0]]);
        let r = sqrt_spd(a.view()).unwrap();
        let back = r.dot(&r);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(back[[i, j]], a[[i, j]], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigenvalues_of_correlation_pair() {
        let rho = 0.3;
        let a = arr2(&[[1.0, rho], [rho, 1.0]]);
        let vals = sym_eigenvalues(a.view());
        assert_abs_diff_eq!(vals[0], 1.0 - rho, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0 + rho, epsilon = 1e-12);
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(400, 5), 83_218_600_080);
        assert_eq!(binomial(3, 5), 0);
    }
}

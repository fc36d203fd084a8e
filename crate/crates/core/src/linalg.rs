//! Small dense linear algebra: boundary-system solves and Hermitian
//! eigendecompositions.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Result, StaError};
use crate::scalar::Real;

/// Condition numbers above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Solves the row-major `n x n` system `a x = b` by Gaussian elimination with
/// partial pivoting.
pub fn solve<T: Real>(a: &[Vec<T>], b: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(StaError::InvalidSpec("linear system is not square".into()));
    }
    let norm_a = one_norm(a);
    let mut lu: Vec<Vec<T>> = a.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| lu[i][col].abs().partial_cmp(&lu[j][col].abs()).unwrap())
            .unwrap();
        if lu[pivot][col] == T::zero() {
            return Err(StaError::SingularSystem { cond: f64::INFINITY });
        }
        lu.swap(col, pivot);
        perm.swap(col, pivot);
        for row in col + 1..n {
            let factor = lu[row][col] / lu[col][col];
            lu[row][col] = factor;
            for k in col + 1..n {
                let v = lu[col][k];
                lu[row][k] -= factor * v;
            }
        }
    }
    let lu_solve = |rhs: &[T]| -> Vec<T> {
        let mut y: Vec<T> = perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = y[k];
                y[i] -= lu[i][k] * v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = y[k];
                y[i] -= lu[i][k] * v;
            }
            y[i] /= lu[i][i];
        }
        y
    };
    // explicit inverse is cheap at these sizes and gives an exact 1-norm
    let mut norm_inv = T::zero();
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col: T = lu_solve(&e).iter().map(|v| v.abs()).sum();
        norm_inv = norm_inv.max(col);
    }
    let cond = (norm_a * norm_inv).as_f64();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(StaError::SingularSystem { cond });
    }
    Ok(lu_solve(b))
}

fn one_norm<T: Real>(a: &[Vec<T>]) -> T {
    let n = a.len();
    (0..n)
        .map(|j| a.iter().map(|r| r[j].abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// Eigenpairs of a real symmetric matrix, ascending. Column `k` of the
/// returned row-major vectors (`vecs[i][k]`) belongs to `vals[k]`.
pub fn symmetric_eigen<T: Real>(a: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let n = a.len();
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| 0.5 * (a[i][j] + a[j][i]).as_f64());
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = order.iter().map(|&k| T::lit(eig.eigenvalues[k])).collect();
    let vecs = (0..n)
        .map(|i| order.iter().map(|&k| T::lit(eig.eigenvectors[(i, k)])).collect())
        .collect();
    (vals, vecs)
}

/// Eigenpairs of a Hermitian matrix, ascending; `vecs[k]` is the
/// eigenvector of `vals[k]`.
pub fn hermitian_eigen<T: Real>(h: &[Vec<Complex<T>>]) -> (Vec<T>, Vec<Vec<Complex<T>>>) {
    let n = h.len();
    let m = DMatrix::<Complex<f64>>::from_fn(n, n, |i, j| {
        let a = h[i][j];
        let b = h[j][i].conj();
        Complex::new(0.5 * (a.re + b.re).as_f64(), 0.5 * (a.im + b.im).as_f64())
    });
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals = order.iter().map(|&k| T::lit(eig.eigenvalues[k])).collect();
    let vecs = order
        .iter()
        .map(|&k| {
            (0..n)
                .map(|i| {
                    let z = eig.eigenvectors[(i, k)];
                    Complex::new(T::lit(z.re), T::lit(z.im))
                })
                .collect()
        })
        .collect();
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a: Vec<Vec<f64>> = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let x = solve(&a, &[3.0, 5.0, 5.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_dependent_rows() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(solve(&a, &[1.0, 2.0]), Err(StaError::SingularSystem { .. })));
    }

    #[test]
    fn pauli_y_spectrum() {
        let i = Complex::new(0.0, 1.0);
        let z = Complex::new(0.0, 0.0);
        let (vals, vecs) = hermitian_eigen(&[vec![z, -i], vec![i, z]]);
        assert!((vals[0] + 1.0_f64).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let v = &vecs[1];
        // sigma_y v = v
        let w0 = -i * v[1];
        assert!((w0 - v[0]).norm() < 1e-14);
    }
}

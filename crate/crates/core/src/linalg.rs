//! Dense factorization helpers.
//!
//! Matrices move through the crate as `ndarray` arrays; the factorizations
//! themselves (SVD, symmetric eigendecomposition, Cholesky solves) are
//! delegated to nalgebra's pure-Rust implementations behind the small
//! wrappers here, which also fix an ordering convention: singular values and
//! eigenvalues always come back sorted in descending order with their
//! vectors permuted to match.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_FACTORIZATION_SWEEPS: usize = 0; // 0 = iterate until convergence

fn to_na(a: ArrayView2<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn to_na_complex(a: ArrayView2<'_, Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

fn from_na_complex(m: &DMatrix<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

fn descending_permutation(values: &DVector<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("non-finite spectrum"));
    order
}

/// Thin SVD `A = U diag(s) Vᵀ` with `s` descending.
///
/// Returns `(u, s, v)` where `u` is `m×r`, `v` is `n×r`, `r = min(m, n)`,
/// and the columns of `u`/`v` are the left/right singular vectors.
pub fn thin_svd(a: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let svd = to_na(a)
        .try_svd(true, true, f64::EPSILON, MAX_FACTORIZATION_SWEEPS)
        .ok_or_else(|| Error::Factorization("svd did not converge".into()))?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let order = descending_permutation(&svd.singular_values);
    let r = order.len();
    let mut u_sorted = Array2::zeros((u.nrows(), r));
    let mut v_sorted = Array2::zeros((v_t.ncols(), r));
    let mut s_sorted = Array1::zeros(r);
    for (dst, &src) in order.iter().enumerate() {
        s_sorted[dst] = svd.singular_values[src];
        for i in 0..u.nrows() {
            u_sorted[[i, dst]] = u[(i, src)];
        }
        for i in 0..v_t.ncols() {
            v_sorted[[i, dst]] = v_t[(src, i)];
        }
    }
    Ok((u_sorted, s_sorted, v_sorted))
}

/// Singular values of a complex matrix, descending.
pub fn complex_singular_values(a: ArrayView2<'_, Complex64>) -> Result<Array1<f64>> {
    let svd = to_na_complex(a)
        .try_svd(false, false, f64::EPSILON, MAX_FACTORIZATION_SWEEPS)
        .ok_or_else(|| Error::Factorization("complex svd did not converge".into()))?;
    let order = descending_permutation(&svd.singular_values);
    Ok(Array1::from_iter(order.iter().map(|&i| svd.singular_values[i])))
}

/// Eigendecomposition of a symmetric matrix; eigenvalues descending,
/// eigenvectors in matching columns.
pub fn symmetric_eigen(a: ArrayView2<'_, f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!("symmetric_eigen needs square input, got {}x{}", a.nrows(), a.ncols())));
    }
    let eig = nalgebra::SymmetricEigen::try_new(to_na(a), f64::EPSILON, MAX_FACTORIZATION_SWEEPS)
        .ok_or_else(|| Error::Factorization("symmetric eigendecomposition did not converge".into()))?;
    let order = descending_permutation(&eig.eigenvalues);
    let n = order.len();
    let mut vals = Array1::zeros(n);
    let mut vecs = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = eig.eigenvalues[src];
        for i in 0..n {
            vecs[[i, dst]] = eig.eigenvectors[(i, src)];
        }
    }
    Ok((vals, vecs))
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn spectral_norm_symmetric(a: ArrayView2<'_, f64>) -> Result<f64> {
    let (vals, _) = symmetric_eigen(a)?;
    Ok(vals.iter().fold(0.0f64, |m, &v| m.max(v.abs())))
}

/// Largest singular value of a general real matrix.
pub fn spectral_norm(a: ArrayView2<'_, f64>) -> Result<f64> {
    let svd = to_na(a)
        .try_svd(false, false, f64::EPSILON, MAX_FACTORIZATION_SWEEPS)
        .ok_or_else(|| Error::Factorization("svd did not converge".into()))?;
    Ok(svd.singular_values.iter().fold(0.0f64, |m, &v| m.max(v)))
}

/// Solves `A X = B` for symmetric positive-definite `A` via Cholesky.
pub fn solve_spd(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Shape(format!(
            "solve_spd: A is {}x{}, B is {}x{}",
            a.nrows(), a.ncols(), b.nrows(), b.ncols()
        )));
    }
    let chol = nalgebra::Cholesky::new(to_na(a))
        .ok_or_else(|| Error::Factorization("matrix is not positive definite".into()))?;
    Ok(from_na(&chol.solve(&to_na(b))))
}

/// Solves `A X = B` for Hermitian positive-definite complex `A`.
pub fn solve_hermitian_pd(
    a: ArrayView2<'_, Complex64>,
    b: ArrayView2<'_, Complex64>,
) -> Result<Array2<Complex64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Shape(format!(
            "solve_hermitian_pd: A is {}x{}, B is {}x{}",
            a.nrows(), a.ncols(), b.nrows(), b.ncols()
        )));
    }
    let chol = nalgebra::Cholesky::new(to_na_complex(a))
        .ok_or_else(|| Error::Factorization("matrix is not Hermitian positive definite".into()))?;
    Ok(from_na_complex(&chol.solve(&to_na_complex(b))))
}

/// Frobenius norm.
pub fn frobenius(a: ArrayView2<'_, f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Frobenius norm of a complex matrix.
pub fn frobenius_complex(a: ArrayView2<'_, Complex64>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use ndarray::array;

    fn random_matrix(rows: usize, cols: usize, rng: &mut SeedStream) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.standard_normal())
    }

    #[test]
    fn svd_reconstructs_and_orders() {
        let mut rng = SeedStream::from_seed(1);
        let a = random_matrix(6, 10, &mut rng);
        let (u, s, v) = thin_svd(a.view()).unwrap();
        for i in 1..s.len() {
            assert!(s[i - 1] >= s[i]);
        }
        let mut recon = Array2::<f64>::zeros((6, 10));
        for r in 0..s.len() {
            for i in 0..6 {
                for j in 0..10 {
                    recon[[i, j]] += s[r] * u[[i, r]] * v[[j, r]];
                }
            }
        }
        let err = frobenius((&a - &recon).view()) / frobenius(a.view());
        assert!(err < 1e-12, "reconstruction error {err}");
        // Orthonormal factors.
        let utu = u.t().dot(&u);
        let vtv = v.t().dot(&v);
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((utu[[i, j]] - want).abs() < 1e-12);
                assert!((vtv[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_eigen_matches_quadratic_form() {
        let mut rng = SeedStream::from_seed(2);
        let b = random_matrix(5, 5, &mut rng);
        let a = b.t().dot(&b);
        let (vals, vecs) = symmetric_eigen(a.view()).unwrap();
        for r in 0..5 {
            let col = vecs.column(r).to_owned();
            let av = a.dot(&col);
            for i in 0..5 {
                assert!((av[i] - vals[r] * col[i]).abs() < 1e-10 * vals[0].max(1.0));
            }
        }
    }

    #[test]
    fn spd_solve_round_trips() {
        let mut rng = SeedStream::from_seed(3);
        let b = random_matrix(8, 8, &mut rng);
        let a = b.t().dot(&b) + Array2::<f64>::eye(8);
        let x_true = random_matrix(8, 3, &mut rng);
        let rhs = a.dot(&x_true);
        let x = solve_spd(a.view(), rhs.view()).unwrap();
        assert!(frobenius((&x - &x_true).view()) < 1e-10);
    }

    #[test]
    fn not_positive_definite_is_an_error() {
        let a = array![[1.0, 0.0], [0.0, -1.0]];
        let b = array![[1.0], [1.0]];
        assert!(solve_spd(a.view(), b.view()).is_err());
    }

    #[test]
    fn hermitian_solve_round_trips() {
        let mut rng = SeedStream::from_seed(4);
        let g = Array2::from_shape_fn((5, 5), |_| rng.complex_gaussian());
        let mut a = Array2::<Complex64>::zeros((5, 5));
        for i in 0..5 {
            for j in 0..5 {
                let mut acc = Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
                for k in 0..5 {
                    acc += g[[i, k]] * g[[j, k]].conj();
                }
                a[[i, j]] = acc;
            }
        }
        let x_true = Array2::from_shape_fn((5, 2), |_| rng.complex_gaussian());
        let rhs = a.dot(&x_true);
        let x = solve_hermitian_pd(a.view(), rhs.view()).unwrap();
        assert!(frobenius_complex((&x - &x_true).view()) < 1e-10);
    }

    #[test]
    fn spectral_norm_agrees_with_svd() {
        let mut rng = SeedStream::from_seed(5);
        let a = random_matrix(4, 7, &mut rng);
        let (_, s, _) = thin_svd(a.view()).unwrap();
        let n = spectral_norm(a.view()).unwrap();
        assert!((n - s[0]).abs() < 1e-12 * s[0]);
    }
}

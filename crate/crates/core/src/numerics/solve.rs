use num_complex::Complex;

use super::matrix::{HermitianMatrix, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Cholesky factor `A = L·L^H` of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    lower: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factors `a`, failing with [`Error::IllConditioned`] when a pivot
    /// `d_k = l_kk²` is not above `min_pivot`.
    ///
    /// Every pivot is a diagonal entry of a Schur complement, so
    /// `λ_min(A) ≤ d_k ≤ λ_max(A)`; a pivot below `min_pivot` therefore bounds
    /// the smallest eigenvalue from above.
    pub fn factor(a: &HermitianMatrix<T>, min_pivot: T) -> Result<Self> {
        let n = a.dim();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let mut l = Matrix::<T>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > min_pivot) || !d.is_finite() {
                return Err(Error::IllConditioned {
                    index: j,
                    pivot: d.to_f64_lossy(),
                });
            }
            let ljj = d.sqrt();
            l[(j, j)] = Complex::new(ljj, T::zero());
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    /// Factors with the relative pivot floor `1e-12·max_i a_ii`.
    pub fn factor_relative(a: &HermitianMatrix<T>) -> Result<Self> {
        let max_diag = (0..a.dim()).map(|i| a[(i, i)].re).fold(T::zero(), T::max);
        Self::factor(a, T::tiny() * max_diag)
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for (k, &yk) in y.iter().enumerate().take(i) {
                s -= l[(i, k)] * yk;
            }
            y[i] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        Ok(y)
    }

    /// Solves `A·X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.dim();
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.rows(),
            });
        }
        let mut out = Matrix::zeros(n, b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.column(j))?;
            for (i, xi) in x.into_iter().enumerate() {
                out[(i, j)] = xi;
            }
        }
        Ok(out)
    }
}

/// Solves `A·x = b` for Hermitian positive definite `A`.
///
/// Near-singular systems (a Cholesky pivot at or below `1e-12` of the largest
/// diagonal entry) are rejected with [`Error::IllConditioned`].
pub fn solve_hermitian<T: Real>(a: &HermitianMatrix<T>, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    Cholesky::factor_relative(a)?.solve(b)
}

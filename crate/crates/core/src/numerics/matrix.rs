use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cis, Real};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diagonal(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b)
            })
            .collect())
    }

    /// `self^H · v`.
    pub fn adjoint_mul_vec(&self, v: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if self.rows != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: rhs.rows * rhs.cols,
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Principal submatrix on the given row/column indices.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Largest `|a(i,j) - conj(a(j,i))|`.
    pub fn hermitian_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows.min(self.cols) {
            for j in i..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix that is Hermitian by construction.
///
/// Construction checks the asymmetry against `1e-12·max(1, max|a_ij|)` and then
/// stores the exact Hermitian part, so downstream algorithms see
/// `a(j,i) == conj(a(i,j))` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T> {
    inner: Matrix<T>,
}

impl<T: Real> HermitianMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        let tol = T::tiny() * T::one().max(m.max_abs());
        let asym = m.hermitian_asymmetry();
        if !(asym <= tol) {
            return Err(Error::NotHermitian {
                asymmetry: asym.to_f64_lossy(),
            });
        }
        Ok(Self::hermitian_part(&m))
    }

    /// Builds from the upper triangle (diagonal imaginary parts dropped).
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            let d = f(i, i);
            m[(i, i)] = Complex::new(d.re, T::zero());
            for j in i + 1..n {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        Self { inner: m }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: Matrix::identity(n),
        }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        Self {
            inner: Matrix::from_diagonal(&diag.iter().map(|&d| Complex::new(d, T::zero())).collect::<Vec<_>>()),
        }
    }

    fn hermitian_part(m: &Matrix<T>) -> Self {
        let half = T::lit(0.5);
        Self::from_upper_fn(m.rows(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * half)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.inner
    }

    /// `self + shift·I`.
    pub fn shifted(&self, shift: T) -> Self {
        let mut m = self.inner.clone();
        for i in 0..m.rows() {
            m[(i, i)].re += shift;
        }
        Self { inner: m }
    }

    /// `self + diag(d)` for a real diagonal.
    pub fn plus_real_diagonal(&self, d: &[T]) -> Result<Self> {
        if d.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: d.len(),
            });
        }
        let mut m = self.inner.clone();
        for (i, &di) in d.iter().enumerate() {
            m[(i, i)].re += di;
        }
        Ok(Self { inner: m })
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self {
            inner: self.inner.scale(Complex::new(s, T::zero())),
        }
    }

    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self {
            inner: self.inner.principal_submatrix(idx),
        }
    }

    /// `Q · self · Q^H`, Hermitian by construction.
    pub fn congruence(&self, q: &Matrix<T>) -> Result<Self> {
        let m = q.matmul(&self.inner)?.matmul(&q.adjoint())?;
        Ok(Self::hermitian_part(&m))
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).map(|i| self.inner[(i, i)].re).sum()
    }
}

impl<T> Index<(usize, usize)> for HermitianMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, idx: (usize, usize)) -> &Complex<T> {
        &self.inner[idx]
    }
}

/// The modem's DFT matrix: `F(n,k) = (1/N)·e^{-j2π nk/N}`.
///
/// With this scaling `F·x` equals [`dft`](super::dft) of `x`.
pub fn dft_matrix<T: Real>(n: usize) -> Matrix<T> {
    let scale = T::one() / T::lit(n as f64);
    let step = -T::TAU() / T::lit(n as f64);
    Matrix::from_fn(n, n, |r, c| cis(step * T::lit(((r * c) % n) as f64)) * scale)
}

//! Independent reference implementations.
//!
//! Straightforward, slow formulations used as oracles by the test suites and
//! by the `validate` self-test. None of them share code paths with the
//! production routines they check.

use num_complex::Complex;

use crate::numerics::Matrix;
use crate::scalar::Real;

/// O(N²) transform. `inverse = false` gives the scaled forward DFT,
/// `inverse = true` the unscaled inverse.
pub fn direct_dft<T: Real>(x: &[Complex<T>], inverse: bool) -> Vec<Complex<T>> {
    let n = x.len();
    let nf = n as f64;
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|k| {
            let mut acc = Complex::new(0.0f64, 0.0);
            for (i, v) in x.iter().enumerate() {
                let phase = sign * std::f64::consts::TAU * ((k * i) % n) as f64 / nf;
                let v = Complex::new(v.re.to_f64_lossy(), v.im.to_f64_lossy());
                acc += v * Complex::new(phase.cos(), phase.sin());
            }
            if !inverse {
                acc /= nf;
            }
            Complex::new(T::lit(acc.re), T::lit(acc.im))
        })
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting. Returns `None` for a zero pivot.
pub fn gauss_jordan_inverse<T: Real>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.rows();
    let mut m: Vec<Vec<Complex<T>>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut inv: Vec<Vec<Complex<T>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Complex::new(T::one(), T::zero())
                    } else {
                        Complex::new(T::zero(), T::zero())
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].norm().partial_cmp(&m[j][col].norm()).unwrap())?;
        if m[pivot][col].norm() == T::zero() {
            return None;
        }
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f.norm() != T::zero() {
                    for j in 0..n {
                        let (mc, ic) = (m[col][j], inv[col][j]);
                        m[i][j] -= f * mc;
                        inv[i][j] -= f * ic;
                    }
                }
            }
        }
    }
    Matrix::from_row_major(n, n, inv.into_iter().flatten().collect()).ok()
}

/// Sample-by-sample output of the time-varying multipath channel for one
/// CP-extended symbol.
///
/// `taps` holds `(delay, gain, doppler)`; `first_useful` is the absolute index
/// of the first post-prefix sample. Samples needing input from before the
/// buffer are left partial (they fall inside the discarded prefix whenever
/// every delay is at most `guard`).
pub fn brute_force_channel(
    x_f: &[Complex<f64>],
    taps: &[(usize, Complex<f64>, f64)],
    guard: usize,
    first_useful: u64,
) -> Vec<Complex<f64>> {
    let n = (x_f.len() - guard) as f64;
    let mut y = vec![Complex::new(0.0, 0.0); x_f.len()];
    for (m, out) in y.iter_mut().enumerate() {
        let absolute = first_useful as f64 + m as f64 - guard as f64;
        for &(delay, gain, doppler) in taps {
            if m >= delay {
                let phase = std::f64::consts::TAU / n * doppler * absolute;
                *out += gain * Complex::new(phase.cos(), phase.sin()) * x_f[m - delay];
            }
        }
    }
    y
}

/// Dense evaluation of the time-domain MMSE formula with explicit inverses:
/// `F·R·F^H·X^H·(X·F·R·F^H·X^H + σ²I)^{-1}·Y`.
pub fn dense_mmse(
    y: &[Complex<f64>],
    x: &[Complex<f64>],
    r_time: &Matrix<f64>,
    sigma2: f64,
) -> Option<Vec<Complex<f64>>> {
    let n = y.len();
    let f = Matrix::<f64>::from_fn(n, n, |r, c| {
        let phase = -std::f64::consts::TAU * ((r * c) % n) as f64 / n as f64;
        Complex::new(phase.cos(), phase.sin()) / n as f64
    });
    let xm = Matrix::from_diagonal(x);
    let frf = f.matmul(r_time).ok()?.matmul(&f.adjoint()).ok()?;
    let ryy = xm
        .matmul(&frf)
        .ok()?
        .matmul(&xm.adjoint())
        .ok()?
        .add(&Matrix::identity(n).scale(Complex::new(sigma2, 0.0)))
        .ok()?;
    let ryy_inv = gauss_jordan_inverse(&ryy)?;
    let filter = frf.matmul(&xm.adjoint()).ok()?.matmul(&ryy_inv).ok()?;
    filter.mul_vec(y).ok()
}

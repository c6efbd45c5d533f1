use num_complex::Complex;

use super::matrix::{HermitianMatrix, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `R = D·diag(λ)·D^H` of a Hermitian matrix.
///
/// For a positive semidefinite `R` this is also its SVD. Values are sorted
/// nonincreasing and the columns of `basis` follow the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition<T> {
    basis: Matrix<T>,
    values: Vec<T>,
}

impl<T: Real> EigenDecomposition<T> {
    pub fn basis(&self) -> &Matrix<T> {
        &self.basis
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `D·diag(λ)·D^H`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| {
            (0..n).fold(Complex::new(T::zero(), T::zero()), |acc, k| {
                acc + self.basis[(i, k)] * self.basis[(j, k)].conj() * self.values[k]
            })
        })
    }

    /// Number of eigenvalues strictly above `rel_tol·λ_0`.
    pub fn numerical_rank(&self, rel_tol: T) -> usize {
        let top = self.values.first().copied().unwrap_or_else(T::zero);
        self.values.iter().filter(|&&v| v > rel_tol * top).count()
    }

    /// Running fraction `Σ_{j≤k} λ_j⁺ / Σ_j λ_j⁺` for each `k`.
    pub fn cumulative_energy(&self) -> Vec<T> {
        let total: T = self.values.iter().map(|&v| v.max(T::zero())).sum();
        let mut acc = T::zero();
        self.values
            .iter()
            .map(|&v| {
                acc += v.max(T::zero());
                if total > T::zero() {
                    acc / total
                } else {
                    T::zero()
                }
            })
            .collect()
    }
}

/// Cyclic complex Jacobi eigensolver.
///
/// Sweeps until the off-diagonal Frobenius mass drops below
/// `1e-12·‖R‖_F` (or the precision floor of `T`). Deterministic for a given
/// input.
pub fn eig_hermitian<T: Real>(r: &HermitianMatrix<T>) -> Result<EigenDecomposition<T>> {
    let n = r.dim();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut a = r.as_matrix().clone();
    let mut v = Matrix::<T>::identity(n);
    let tol = T::tiny() * a.frobenius_norm();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > tol {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps ties in index order
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .re
            .partial_cmp(&a[(i, i)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let basis = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition { basis, values })
}

fn off_diagonal_norm<T: Real>(a: &Matrix<T>) -> T {
    let n = a.rows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Annihilates `a(p,q)` with the unitary rotation
/// `J = [[c, s·e], [-s·ē, c]]` on columns `(p, q)`, where `e = a(p,q)/|a(p,q)|`.
fn rotate<T: Real>(a: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let g = a[(p, q)];
    let mag = g.norm();
    if mag == T::zero() {
        return;
    }
    let e = g / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (mag + mag);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    let se = e * s;
    let se_conj = se.conj();
    let n = a.rows();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - se_conj * akq;
        a[(k, q)] = se * akp + akq * c;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - se * aqk;
        a[(q, k)] = se_conj * apk + aqk * c;
    }
    let zero = Complex::new(T::zero(), T::zero());
    a[(p, q)] = zero;
    a[(q, p)] = zero;
    a[(p, p)] = Complex::new(app - t * mag, T::zero());
    a[(q, q)] = Complex::new(aqq + t * mag, T::zero());

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - se_conj * vkq;
        v[(k, q)] = se * vkp + vkq * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn unitarity_error(d: &Matrix<f64>) -> f64 {
        let g = d.adjoint().matmul(d).unwrap();
        g.sub(&Matrix::identity(d.rows())).unwrap().max_abs()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = eig_hermitian(&HermitianMatrix::<f64>::identity(4)).unwrap();
        for &v in e.values() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn all_ones_is_rank_one() {
        let r = HermitianMatrix::<f64>::from_upper_fn(4, |_, _| C::new(1.0, 0.0));
        let e = eig_hermitian(&r).unwrap();
        let expect = [4.0, 0.0, 0.0, 0.0];
        for (v, x) in e.values().iter().zip(expect) {
            assert!((v - x).abs() < 1e-12, "{v} vs {x}");
        }
        // leading vector is (1/2)(1,1,1,1) up to a unit phase
        let d0 = e.basis().column(0);
        let phase = d0[0] / d0[0].norm();
        for z in d0 {
            assert!((z / phase - C::new(0.5, 0.0)).norm() < 1e-12);
        }
        assert!(unitarity_error(e.basis()) < 1e-12);
    }

    #[test]
    fn two_by_two_complex() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let r =
            HermitianMatrix::<f64>::from_upper_fn(2, |i, j| if i == j { C::new(2.0, 0.0) } else { C::new(0.0, 1.0) });
        let e = eig_hermitian(&r).unwrap();
        assert!((e.values()[0] - 3.0).abs() < 1e-14);
        assert!((e.values()[1] - 1.0).abs() < 1e-14);
        assert!(e.reconstruct().sub(r.as_matrix()).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn indefinite_values_sorted() {
        let r = HermitianMatrix::<f64>::from_real_diagonal(&[-1.0, 3.0, 0.5]);
        let e = eig_hermitian(&r).unwrap();
        assert_eq!(e.values(), &[3.0, 0.5, -1.0]);
    }

    #[test]
    fn cumulative_energy_and_rank() {
        let r = HermitianMatrix::<f64>::from_real_diagonal(&[2.0, 0.0, 2.0, 0.0]);
        let e = eig_hermitian(&r).unwrap();
        assert_eq!(e.numerical_rank(1e-10), 2);
        let cum = e.cumulative_energy();
        assert!((cum[0] - 0.5).abs() < 1e-15);
        assert!((cum[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_precision_reconstruction() {
        let r = HermitianMatrix::<f32>::from_upper_fn(5, |i, j| {
            Complex::new(1.0 / (1.0 + i as f32 + j as f32), 0.1 * (j as f32 - i as f32))
        });
        let e = eig_hermitian(&r).unwrap();
        assert!(e.reconstruct().sub(r.as_matrix()).unwrap().max_abs() < 1e-5);
    }
}

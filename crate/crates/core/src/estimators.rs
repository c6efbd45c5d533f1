//! Pilot-based channel estimators.
//!
//! All estimators work on the vector of per-carrier attenuations. The LMMSE
//! family smooths the LS estimate with the channel frequency correlation
//! `R_HH`; the simplified form replaces the pilot-dependent term
//! `σ²(XX^H)^{-1}` with `(β/SNR)·I`, and the low-rank form keeps only the
//! `p` dominant eigenmodes of that smoother. The MMSE estimator works from
//! the time-domain covariance through the scaled DFT matrix.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::modem::NEAR_ZERO;
use crate::numerics::{eig_hermitian, Cholesky, HermitianMatrix, Matrix};
use crate::scalar::Real;

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_pilots<T: Real>(pilots: &[Complex<T>]) -> Result<()> {
    let floor = T::lit(NEAR_ZERO);
    for (k, x) in pilots.iter().enumerate() {
        let mag = x.norm();
        if !(mag >= floor) {
            return Err(Error::NearZeroPilot {
                carrier: k,
                magnitude: mag.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// Least-squares estimate `Ĥ(k) = Y(k)/X(k)`.
pub fn ls_estimate<T: Real>(received: &[Complex<T>], pilots: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    check_len(received.len(), pilots.len())?;
    check_pilots(pilots)?;
    Ok(received.iter().zip(pilots).map(|(&y, &x)| y / x).collect())
}

/// LMMSE smoother with the exact pilot-dependent regularizer, factored once
/// for a fixed pilot vector.
#[derive(Debug, Clone)]
pub struct FullLmmse<T> {
    correlation: HermitianMatrix<T>,
    factor: Cholesky<T>,
}

impl<T: Real> FullLmmse<T> {
    /// Factors `R_HH + σ²·diag(1/|X(k)|²)`.
    pub fn new(correlation: &HermitianMatrix<T>, sigma2: T, pilots: &[Complex<T>]) -> Result<Self> {
        check_len(correlation.dim(), pilots.len())?;
        check_pilots(pilots)?;
        if sigma2 < T::zero() || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance {sigma2} must be finite and nonnegative"
            )));
        }
        let loading: Vec<T> = pilots.iter().map(|x| sigma2 / x.norm_sqr()).collect();
        let m = correlation.plus_real_diagonal(&loading)?;
        let factor = if sigma2 > T::zero() {
            // pivots are bounded below by the smallest loading
            let floor = loading.iter().copied().fold(T::infinity(), T::min) * T::lit(0.5);
            Cholesky::factor(&m, floor)?
        } else {
            Cholesky::factor_relative(&m)?
        };
        Ok(Self {
            correlation: correlation.clone(),
            factor,
        })
    }

    /// `R_HH·(R_HH + σ²(XX^H)^{-1})^{-1}·ĥ_ls`.
    pub fn apply(&self, h_ls: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let z = self.factor.solve(h_ls)?;
        self.correlation.as_matrix().mul_vec(&z)
    }
}

/// One-shot full LMMSE estimate.
pub fn lmmse_full<T: Real>(
    h_ls: &[Complex<T>],
    correlation: &HermitianMatrix<T>,
    sigma2: T,
    pilots: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    check_len(correlation.dim(), h_ls.len())?;
    FullLmmse::new(correlation, sigma2, pilots)?.apply(h_ls)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterKind<T> {
    /// Dense smoother `W = R_HH·(R_HH + (β/SNR)·I)^{-1}`.
    Simplified { matrix: Matrix<T> },
    /// Factored rank-`p` smoother `D_p·Δ_p·D_p^H`.
    LowRank {
        /// First `p` eigenvectors of `R_HH`, as an `N × p` matrix.
        basis: Matrix<T>,
        /// `δ_k = λ_k/(λ_k + β/SNR)` for `k < p`.
        weights: Vec<T>,
        /// Full eigenvalue spectrum of `R_HH`, nonincreasing.
        eigenvalues: Vec<T>,
    },
}

/// A data-independent smoothing filter computed once from `R_HH`, SNR and β.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedFilter<T> {
    kind: FilterKind<T>,
    dim: usize,
    snr: T,
    beta: T,
}

impl<T: Real> PrecomputedFilter<T> {
    pub fn kind(&self) -> &FilterKind<T> {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn snr(&self) -> T {
        self.snr
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// Rank of the factored filter, or `N` for the dense one.
    pub fn rank(&self) -> usize {
        match &self.kind {
            FilterKind::Simplified { .. } => self.dim,
            FilterKind::LowRank { weights, .. } => weights.len(),
        }
    }

    /// Dense `N × N` form of the filter.
    pub fn to_matrix(&self) -> Matrix<T> {
        match &self.kind {
            FilterKind::Simplified { matrix } => matrix.clone(),
            FilterKind::LowRank { basis, weights, .. } => {
                let n = self.dim;
                Matrix::from_fn(n, n, |i, j| {
                    weights
                        .iter()
                        .enumerate()
                        .fold(Complex::new(T::zero(), T::zero()), |acc, (k, &d)| {
                            acc + basis[(i, k)] * basis[(j, k)].conj() * d
                        })
                })
            }
        }
    }
}

fn check_snr_beta<T: Real>(snr: T, beta: T) -> Result<()> {
    if !(snr > T::zero()) || !snr.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "SNR {snr} must be positive and finite"
        )));
    }
    if !(beta > T::zero()) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta {beta} must be positive and finite"
        )));
    }
    Ok(())
}

/// Simplified LMMSE smoother `W = R_HH·(R_HH + (β/SNR)·I)^{-1}`.
///
/// Computed as `W = Z^H` with `(R_HH + (β/SNR)I)·Z = R_HH`, which holds because
/// both factors are Hermitian.
pub fn lmmse_precompute<T: Real>(correlation: &HermitianMatrix<T>, snr: T, beta: T) -> Result<PrecomputedFilter<T>> {
    check_snr_beta(snr, beta)?;
    let shift = beta / snr;
    let chol = Cholesky::factor(&correlation.shifted(shift), shift * T::lit(0.5))?;
    let z = chol.solve_matrix(correlation.as_matrix())?;
    Ok(PrecomputedFilter {
        kind: FilterKind::Simplified { matrix: z.adjoint() },
        dim: correlation.dim(),
        snr,
        beta,
    })
}

/// Rank-`p` LMMSE smoother from the eigendecomposition `R_HH = D·Λ·D^H`.
///
/// Slightly negative eigenvalues from rounding are treated as zero, so every
/// weight lies in `[0, 1)`.
pub fn lowrank_precompute<T: Real>(
    correlation: &HermitianMatrix<T>,
    snr: T,
    beta: T,
    rank: usize,
) -> Result<PrecomputedFilter<T>> {
    let n = correlation.dim();
    if rank == 0 || rank > n {
        return Err(Error::RankOutOfRange { rank, dim: n });
    }
    check_snr_beta(snr, beta)?;
    let eig = eig_hermitian(correlation)?;
    let shift = beta / snr;
    let weights = eig.values()[..rank]
        .iter()
        .map(|&l| {
            let l = l.max(T::zero());
            l / (l + shift)
        })
        .collect();
    let basis = Matrix::from_fn(n, rank, |i, k| eig.basis()[(i, k)]);
    Ok(PrecomputedFilter {
        kind: FilterKind::LowRank {
            basis,
            weights,
            eigenvalues: eig.values().to_vec(),
        },
        dim: n,
        snr,
        beta,
    })
}

/// Applies a precomputed smoother to an LS estimate.
pub fn apply_filter<T: Real>(filter: &PrecomputedFilter<T>, h_ls: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    check_len(filter.dim, h_ls.len())?;
    match &filter.kind {
        FilterKind::Simplified { matrix } => matrix.mul_vec(h_ls),
        FilterKind::LowRank { basis, weights, .. } => {
            let coeffs: Vec<Complex<T>> = basis
                .adjoint_mul_vec(h_ls)?
                .into_iter()
                .zip(weights)
                .map(|(c, &d)| c * d)
                .collect();
            basis.mul_vec(&coeffs)
        }
    }
}

/// MMSE estimator prepared for a fixed pilot vector.
///
/// With `A = F·R·F^H` the frequency-domain covariance, the estimate is
/// `A·X^H·(X·A·X^H + σ²I)^{-1}·Y`.
#[derive(Debug, Clone)]
pub struct Mmse<T> {
    freq_cov: HermitianMatrix<T>,
    pilots: Vec<Complex<T>>,
    factor: Cholesky<T>,
}

impl<T: Real> Mmse<T> {
    /// Prepares from the frequency-domain covariance `A = F·R·F^H`.
    pub fn from_freq_covariance(freq_cov: &HermitianMatrix<T>, pilots: &[Complex<T>], sigma2: T) -> Result<Self> {
        check_len(freq_cov.dim(), pilots.len())?;
        if sigma2 < T::zero() || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance {sigma2} must be finite and nonnegative"
            )));
        }
        let n = pilots.len();
        let ryy =
            HermitianMatrix::from_upper_fn(n, |i, j| pilots[i] * freq_cov[(i, j)] * pilots[j].conj()).shifted(sigma2);
        let factor = if sigma2 > T::zero() {
            Cholesky::factor(&ryy, sigma2 * T::lit(0.5))?
        } else {
            check_pilots(pilots)?;
            Cholesky::factor_relative(&ryy)?
        };
        Ok(Self {
            freq_cov: freq_cov.clone(),
            pilots: pilots.to_vec(),
            factor,
        })
    }

    /// Prepares from the time-domain covariance `R` via the scaled DFT matrix.
    pub fn new(time_cov: &HermitianMatrix<T>, pilots: &[Complex<T>], sigma2: T) -> Result<Self> {
        check_len(time_cov.dim(), pilots.len())?;
        let freq_cov = crate::channel::time_to_freq_covariance(time_cov)?;
        Self::from_freq_covariance(&freq_cov, pilots, sigma2)
    }

    pub fn apply(&self, received: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_len(self.pilots.len(), received.len())?;
        let z = self.factor.solve(received)?;
        let xz: Vec<Complex<T>> = self.pilots.iter().zip(&z).map(|(x, &v)| x.conj() * v).collect();
        self.freq_cov.as_matrix().mul_vec(&xz)
    }
}

/// One-shot MMSE estimate
/// `F·R·F^H·X^H·(X·F·R·F^H·X^H + σ²I)^{-1}·Y` from the time-domain covariance.
pub fn mmse_estimate<T: Real>(
    received: &[Complex<T>],
    pilots: &[Complex<T>],
    time_cov: &HermitianMatrix<T>,
    sigma2: T,
) -> Result<Vec<Complex<T>>> {
    check_len(pilots.len(), received.len())?;
    Mmse::new(time_cov, pilots, sigma2)?.apply(received)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::max_abs_diff;

    type C = Complex<f64>;

    #[test]
    fn ls_basic() {
        let y = vec![C::new(1.0, 2.0), C::new(-1.0, 0.5)];
        assert_eq!(ls_estimate(&y, &[C::new(1.0, 0.0); 2]).unwrap(), y);
        assert!(matches!(
            ls_estimate(&y, &[C::new(1.0, 0.0), C::new(0.0, 0.0)]),
            Err(Error::NearZeroPilot { carrier: 1, .. })
        ));
        assert!(matches!(
            ls_estimate(&y, &[C::new(1.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identity_correlation_halves() {
        let f = lmmse_precompute(&HermitianMatrix::<f64>::identity(3), 2.0, 2.0).unwrap();
        let w = f.to_matrix();
        assert!(w.sub(&Matrix::identity(3).scale(C::new(0.5, 0.0))).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn rank_bounds() {
        let r = HermitianMatrix::<f64>::identity(4);
        assert!(matches!(
            lowrank_precompute(&r, 1.0, 1.0, 0),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(matches!(
            lowrank_precompute(&r, 1.0, 1.0, 5),
            Err(Error::RankOutOfRange { .. })
        ));
        assert_eq!(lowrank_precompute(&r, 1.0, 1.0, 2).unwrap().rank(), 2);
    }

    #[test]
    fn invalid_snr_rejected() {
        let r = HermitianMatrix::<f64>::identity(2);
        assert!(lmmse_precompute(&r, 0.0, 1.0).is_err());
        assert!(lmmse_precompute(&r, f64::INFINITY, 1.0).is_err());
        assert!(lmmse_precompute(&r, 1.0, -1.0).is_err());
    }

    #[test]
    fn zero_noise_full_lmmse_is_identity_for_full_rank() {
        let r = HermitianMatrix::<f64>::from_upper_fn(3, |i, j| {
            if i == j {
                C::new(1.0, 0.0)
            } else {
                C::new(0.3, 0.1 * (j - i) as f64)
            }
        });
        let h = vec![C::new(1.0, -1.0), C::new(0.5, 0.2), C::new(-0.3, 0.9)];
        let x = vec![C::new(1.0, 0.0), C::new(0.0, -1.0), C::new(0.6, 0.8)];
        let out = lmmse_full(&h, &r, 0.0, &x).unwrap();
        assert!(max_abs_diff(&out, &h) < 1e-12);
    }

    #[test]
    fn zero_noise_singular_correlation_is_reported() {
        let r = HermitianMatrix::<f64>::from_upper_fn(3, |_, _| C::new(1.0, 0.0));
        let x = vec![C::new(1.0, 0.0); 3];
        assert!(matches!(lmmse_full(&x, &r, 0.0, &x), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn mmse_zero_input() {
        let r = HermitianMatrix::<f64>::from_real_diagonal(&[0.5, 0.3, 0.2, 0.0]);
        let x = vec![C::new(1.0, 0.0), C::new(-1.0, 0.0), C::new(0.0, 1.0), C::new(1.0, 0.0)];
        let out = mmse_estimate(&[C::new(0.0, 0.0); 4], &x, &r, 0.1).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }
}

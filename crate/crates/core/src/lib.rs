//! Baseband OFDM channel-estimation laboratory.
//!
//! The crate models a block-pilot OFDM link end to end: bit mapping, IDFT and
//! cyclic-prefix framing, a multipath Rayleigh channel with per-path Doppler
//! rotation, AWGN, and the receive chain. Four pilot-based estimators are
//! provided (LS, LMMSE in full and simplified form, low-rank LMMSE, and the
//! time-domain MMSE), together with a seeded Monte Carlo harness that
//! accumulates BER and channel MSE per estimator and SNR.
//!
//! The numerical kernel, modem, channel and estimator modules are generic over
//! the real scalar type ([`Real`], implemented for `f32` and `f64`). The
//! simulation harness works in `f64`; the aliases below name the concrete
//! types it uses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod estimators;
pub mod modem;
pub mod numerics;
pub mod reference;
pub mod scalar;
pub mod simkit;

pub use error::{Error, Result};
pub use scalar::Real;

/// Complex baseband sample in double precision.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix in double precision.
pub type Matrix64 = numerics::Matrix<f64>;
/// Hermitian matrix in double precision.
pub type Hermitian64 = numerics::HermitianMatrix<f64>;
/// Eigendecomposition in double precision.
pub type Eigen64 = numerics::EigenDecomposition<f64>;
/// Symbol alphabet in double precision.
pub type Constellation64 = modem::Constellation<f64>;
/// Channel model in double precision.
pub type ChannelModel64 = channel::ChannelModel<f64>;
/// Channel realization in double precision.
pub type Realization64 = channel::ChannelRealization<f64>;
/// Precomputed smoothing filter in double precision.
pub type Filter64 = estimators::PrecomputedFilter<f64>;

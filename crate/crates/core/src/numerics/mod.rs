//! Complex-vector and small dense-matrix kernel.
//!
//! Transforms use the asymmetric scaling convention of the modem: the forward
//! DFT carries the `1/N` factor and the inverse carries none, so
//! `idft(dft(x)) == x` and Parseval reads `Σ|x(n)|² = N·Σ|X(k)|²`.

mod eigen;
mod matrix;
mod random;
mod solve;
mod transform;

pub use eigen::{eig_hermitian, EigenDecomposition};
pub use matrix::{dft_matrix, HermitianMatrix, Matrix};
pub use random::{gaussian_pair_stream, mix, SeededStream};
pub use solve::{solve_hermitian, Cholesky};
pub use transform::{dft, idft};

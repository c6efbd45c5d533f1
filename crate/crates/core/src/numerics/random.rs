use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Deterministic random stream keyed by `(seed, stream_id)`.
///
/// The seed keys a ChaCha generator and the stream id selects one of its
/// independent 2⁶⁴ streams, so draws depend only on the pair and never on the
/// order in which parallel trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// A sub-stream with a derived id; distinct tags give unrelated streams.
    pub fn child(&self, tag: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: mix(self.stream_id ^ mix(tag.wrapping_add(0x51_7C_C1_B7_27_22_0A_95))),
        }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `n` circularly symmetric complex Gaussian samples with `E|z|² = variance`.
pub fn gaussian_pair_stream<T: Real>(s: SeededStream, n: usize, variance: T) -> Result<Vec<Complex<T>>> {
    if variance < T::zero() || variance.is_nan() {
        return Err(Error::NegativeVariance(variance.to_f64_lossy()));
    }
    if variance == T::zero() {
        return Ok(vec![Complex::new(T::zero(), T::zero()); n]);
    }
    let sigma = (variance.to_f64_lossy() / 2.0).sqrt();
    let mut rng = s.rng();
    Ok((0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(re * sigma), T::lit(im * sigma))
        })
        .collect())
}

//! Time-varying multipath Rayleigh channel.
//!
//! Each path `i` has an integer delay `τ_i`, mean power `σ_i²` and normalized
//! Doppler `f_Di·T`. Within a realization the gain `h_i` is fixed and rotates
//! deterministically: the impulse response at absolute sample `n` is
//! `h_i·e^{j(2π/N)·f_Di T·n}` at delay `τ_i`.
//!
//! Sample indexing: a realization carries `start`, the absolute index of the
//! first post-prefix sample of the OFDM symbol it is applied to. Prefix
//! samples sit at `start − Ng … start − 1`, so the rotation is continuous
//! across consecutive symbols when `start` advances by `N + Ng`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{dft_matrix, gaussian_pair_stream, HermitianMatrix, SeededStream};
use crate::scalar::{cis, Real};

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap<T> {
    pub delay: usize,
    pub power: T,
    /// Normalized Doppler shift `f_D·T`.
    pub doppler: T,
}

/// Gain statistics of the paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fading {
    /// Gains drawn circularly symmetric Gaussian with variance `σ_i²`.
    #[default]
    Rayleigh,
    /// Deterministic gains `h_i = σ_i` (no fading); used for AWGN anchors.
    Static,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel<T> {
    taps: Vec<Tap<T>>,
    fading: Fading,
}

impl<T: Real> ChannelModel<T> {
    /// Validates a model whose powers already sum to one (within `1e-12`).
    pub fn new(taps: Vec<Tap<T>>, fading: Fading) -> Result<Self> {
        let model = Self { taps, fading };
        model.check_shape()?;
        let total: T = model.taps.iter().map(|t| t.power).sum();
        if (total - T::one()).abs() > T::tiny() {
            return Err(Error::InvalidModel(format!("tap powers sum to {total}, expected 1")));
        }
        Ok(model)
    }

    /// Builds a model after scaling the powers to unit sum.
    pub fn normalized(mut taps: Vec<Tap<T>>, fading: Fading) -> Result<Self> {
        let total: T = taps.iter().map(|t| t.power).sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::InvalidModel("tap powers must have a positive finite sum".into()));
        }
        for t in &mut taps {
            t.power /= total;
        }
        let model = Self { taps, fading };
        model.check_shape()?;
        Ok(model)
    }

    /// Four taps at delays {0, 2, 5, 9} with powers `∝ e^{−τ/5}` and a common Doppler.
    pub fn reference(doppler: T) -> Self {
        let taps = [0usize, 2, 5, 9]
            .iter()
            .map(|&d| Tap {
                delay: d,
                power: T::lit((-(d as f64) / 5.0).exp()),
                doppler,
            })
            .collect();
        Self::normalized(taps, Fading::Rayleigh).expect("reference profile is valid")
    }

    /// A single unit-power tap at delay zero.
    pub fn flat(fading: Fading) -> Self {
        Self {
            taps: vec![Tap {
                delay: 0,
                power: T::one(),
                doppler: T::zero(),
            }],
            fading,
        }
    }

    fn check_shape(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::InvalidModel("no taps".into()));
        }
        if self.taps.windows(2).any(|w| w[0].delay >= w[1].delay) {
            return Err(Error::InvalidModel("tap delays must be strictly increasing".into()));
        }
        for t in &self.taps {
            if !(t.power >= T::zero()) || !t.power.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "tap power {} is not a nonnegative number",
                    t.power
                )));
            }
            if !t.doppler.is_finite() {
                return Err(Error::InvalidModel("tap Doppler must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn taps(&self) -> &[Tap<T>] {
        &self.taps
    }

    pub fn fading(&self) -> Fading {
        self.fading
    }

    pub fn max_delay(&self) -> usize {
        self.taps.last().map_or(0, |t| t.delay)
    }

    /// Same taps with every Doppler replaced by `doppler`.
    pub fn with_doppler(mut self, doppler: T) -> Self {
        for t in &mut self.taps {
            t.doppler = doppler;
        }
        self
    }

    pub fn with_fading(mut self, fading: Fading) -> Self {
        self.fading = fading;
        self
    }

    /// Checks the no-ISI condition `τ_max ≤ Ng`.
    pub fn check_guard(&self, guard: usize) -> Result<()> {
        let delay = self.max_delay();
        if delay > guard {
            return Err(Error::DelayExceedsGuard { delay, guard });
        }
        Ok(())
    }

    pub fn is_static_in_time(&self) -> bool {
        self.taps.iter().all(|t| t.doppler == T::zero())
    }
}

/// Drawn path gains plus the position of the symbol they are applied to.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    gains: Vec<Complex<T>>,
    model: ChannelModel<T>,
    start: u64,
}

impl<T: Real> ChannelRealization<T> {
    pub fn from_gains(model: ChannelModel<T>, gains: Vec<Complex<T>>, start: u64) -> Result<Self> {
        if gains.len() != model.taps.len() {
            return Err(Error::DimensionMismatch {
                expected: model.taps.len(),
                got: gains.len(),
            });
        }
        Ok(Self { gains, model, start })
    }

    pub fn gains(&self) -> &[Complex<T>] {
        &self.gains
    }

    pub fn model(&self) -> &ChannelModel<T> {
        &self.model
    }

    pub fn start(&self) -> u64 {
        self.start
    }

    /// Same gains, positioned at a different symbol.
    pub fn at(&self, start: u64) -> Self {
        Self {
            gains: self.gains.clone(),
            model: self.model.clone(),
            start,
        }
    }

    /// Doppler rotation `e^{j(2π/N)·f_D T·n}` of path `i` at absolute sample `n`.
    fn rotation(&self, i: usize, fft_size: usize, absolute: f64) -> Complex<T> {
        let doppler = self.model.taps[i].doppler;
        if doppler == T::zero() {
            return Complex::new(T::one(), T::zero());
        }
        let phase = std::f64::consts::TAU / fft_size as f64 * doppler.to_f64_lossy() * absolute;
        cis(T::lit(phase))
    }

    /// Time-averaged rotation `A_i = (1/N)·Σ_{n<N} e^{j(2π/N)·f_D T·(start+n)}`.
    pub fn doppler_average(&self, i: usize, fft_size: usize) -> Complex<T> {
        if self.model.taps[i].doppler == T::zero() {
            return Complex::new(T::one(), T::zero());
        }
        let sum = (0..fft_size).fold(Complex::new(T::zero(), T::zero()), |acc, n| {
            acc + self.rotation(i, fft_size, self.start as f64 + n as f64)
        });
        sum / T::lit(fft_size as f64)
    }
}

/// Draws independent gains with `E|h_i|² = σ_i²` (or `h_i = σ_i` for static fading).
pub fn draw_realization<T: Real>(model: &ChannelModel<T>, stream: SeededStream) -> ChannelRealization<T> {
    let gains = match model.fading {
        Fading::Rayleigh => {
            let unit = gaussian_pair_stream::<T>(stream, model.taps.len(), T::one()).expect("unit variance");
            unit.into_iter()
                .zip(&model.taps)
                .map(|(z, t)| z * t.power.sqrt())
                .collect()
        }
        Fading::Static => model
            .taps
            .iter()
            .map(|t| Complex::new(t.power.sqrt(), T::zero()))
            .collect(),
    };
    ChannelRealization {
        gains,
        model: model.clone(),
        start: 0,
    }
}

/// Time-varying convolution of one CP-extended symbol.
///
/// `y_f(m) = Σ_i h_i·e^{j(2π/N) f_Di T (start + m − Ng)}·x_f(m − τ_i)`; input
/// from before the buffer is treated as zero, which only affects prefix
/// samples when `τ_max ≤ Ng`.
pub fn apply_channel<T: Real>(x_f: &[Complex<T>], c: &ChannelRealization<T>, guard: usize) -> Result<Vec<Complex<T>>> {
    if x_f.len() <= guard {
        return Err(Error::DimensionMismatch {
            expected: guard + 1,
            got: x_f.len(),
        });
    }
    c.model.check_guard(guard)?;
    let n = x_f.len() - guard;
    let mut y = vec![Complex::new(T::zero(), T::zero()); x_f.len()];
    let origin = c.start as f64 - guard as f64;
    for (i, (tap, &h)) in c.model.taps.iter().zip(&c.gains).enumerate() {
        let static_gain = tap.doppler == T::zero();
        for m in tap.delay..x_f.len() {
            let g = if static_gain {
                h
            } else {
                h * c.rotation(i, n, origin + m as f64)
            };
            y[m] += g * x_f[m - tap.delay];
        }
    }
    Ok(y)
}

/// Adds complex AWGN of variance `signal_power / 10^(snr_db/10)`.
///
/// `snr_db = +∞` disables noise. Returns the noisy signal and the noise
/// variance actually used.
pub fn add_awgn<T: Real>(
    y: &[Complex<T>],
    snr_db: f64,
    signal_power: T,
    stream: SeededStream,
) -> Result<(Vec<Complex<T>>, T)> {
    if !(signal_power > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "signal power {signal_power} must be positive"
        )));
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidParameter("SNR is NaN".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok((y.to_vec(), T::zero()));
    }
    let variance = signal_power / T::lit(10f64.powf(snr_db / 10.0));
    let noise = gaussian_pair_stream(stream, y.len(), variance)?;
    Ok((y.iter().zip(noise).map(|(&a, w)| a + w).collect(), variance))
}

/// Per-carrier response over the symbol window:
/// `H(k) = Σ_i h_i·A_i·e^{−j2πτ_i k/N}`.
pub fn freq_response<T: Real>(c: &ChannelRealization<T>, fft_size: usize) -> Vec<Complex<T>> {
    let weights: Vec<Complex<T>> = (0..c.gains.len())
        .map(|i| c.gains[i] * c.doppler_average(i, fft_size))
        .collect();
    let step = -T::TAU() / T::lit(fft_size as f64);
    (0..fft_size)
        .map(|k| {
            c.model
                .taps
                .iter()
                .zip(&weights)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (t, &w)| {
                    acc + w * cis(step * T::lit(((t.delay * k) % fft_size) as f64))
                })
        })
        .collect()
}

/// Inter-carrier interference from Doppler-induced leakage:
///
/// `I(k) = Σ_i Σ_{K≠k} h_i·X(K)·e^{−j2πτ_i K/N}·e^{jθ_i·start}·(1/N)·
///  (1 − e^{j2π(f_Di T + K − k)}) / (1 − e^{j(2π/N)(f_Di T + K − k)})`
///
/// with `θ_i = 2π f_Di T / N`. Zero when every Doppler is zero.
pub fn ici_term<T: Real>(c: &ChannelRealization<T>, x: &[Complex<T>], fft_size: usize) -> Result<Vec<Complex<T>>> {
    if x.len() != fft_size {
        return Err(Error::DimensionMismatch {
            expected: fft_size,
            got: x.len(),
        });
    }
    let n = fft_size as f64;
    let mut out = vec![Complex::new(T::zero(), T::zero()); fft_size];
    for (i, (tap, &h)) in c.model.taps.iter().zip(&c.gains).enumerate() {
        let f = tap.doppler.to_f64_lossy();
        if f == 0.0 {
            continue;
        }
        let start_phase = c.rotation(i, fft_size, c.start as f64);
        // leakage(d) for offset d = K − k, d in −(N−1)..=(N−1)
        let leakage = |d: i64| -> Complex<f64> {
            let a = f + d as f64;
            let num = Complex::new(1.0, 0.0) - Complex::from_polar(1.0, std::f64::consts::TAU * a);
            let den = Complex::new(1.0, 0.0) - Complex::from_polar(1.0, std::f64::consts::TAU * a / n);
            if den.norm() < 1e-14 {
                Complex::new(1.0, 0.0)
            } else {
                num / den / n
            }
        };
        let shaped: Vec<Complex<T>> = (0..fft_size)
            .map(|kk| {
                let phase = -std::f64::consts::TAU * ((tap.delay * kk) % fft_size) as f64 / n;
                h * start_phase * x[kk] * cis(T::lit(phase))
            })
            .collect();
        for (k, o) in out.iter_mut().enumerate() {
            for (kk, &s) in shaped.iter().enumerate() {
                if kk != k {
                    let l = leakage(kk as i64 - k as i64);
                    *o += s * Complex::new(T::lit(l.re), T::lit(l.im));
                }
            }
        }
    }
    Ok(out)
}

/// Frequency-domain correlation `R_HH(k,k') = Σ_i σ_i²·e^{−j2πτ_i(k−k')/N}`
/// for uncorrelated taps.
pub fn freq_correlation<T: Real>(model: &ChannelModel<T>, fft_size: usize) -> HermitianMatrix<T> {
    let step = -T::TAU() / T::lit(fft_size as f64);
    HermitianMatrix::from_upper_fn(fft_size, |k, kp| {
        let d = (k + fft_size - kp) % fft_size;
        model.taps.iter().fold(Complex::new(T::zero(), T::zero()), |acc, t| {
            acc + cis(step * T::lit(((t.delay * d) % fft_size) as f64)) * t.power
        })
    })
}

/// Sample estimate of `R_HH` from `realizations` zero-Doppler draws.
pub fn empirical_freq_correlation<T: Real>(
    model: &ChannelModel<T>,
    fft_size: usize,
    realizations: usize,
    stream: SeededStream,
) -> Result<HermitianMatrix<T>> {
    if realizations == 0 {
        return Err(Error::InvalidParameter("need at least one realization".into()));
    }
    let still = model.clone().with_doppler(T::zero()).with_fading(Fading::Rayleigh);
    let mut acc = crate::numerics::Matrix::<T>::zeros(fft_size, fft_size);
    for r in 0..realizations {
        let h = freq_response(&draw_realization(&still, stream.child(r as u64)), fft_size);
        for i in 0..fft_size {
            for j in i..fft_size {
                acc[(i, j)] += h[i] * h[j].conj();
            }
        }
    }
    let scale = T::one() / T::lit(realizations as f64);
    Ok(HermitianMatrix::from_upper_fn(fft_size, |i, j| acc[(i, j)] * scale))
}

/// Time-domain CIR covariance `R_gg`: `σ_i²` on the diagonal at `τ_i`.
///
/// Relation to the frequency domain under the scaled DFT matrix `F`:
/// `F·R_gg·F^H = R_HH / N²`.
pub fn time_correlation<T: Real>(model: &ChannelModel<T>, fft_size: usize) -> Result<HermitianMatrix<T>> {
    if model.max_delay() >= fft_size {
        return Err(Error::InvalidModel(format!(
            "tap delay {} does not fit in {fft_size} samples",
            model.max_delay()
        )));
    }
    let mut diag = vec![T::zero(); fft_size];
    for t in &model.taps {
        diag[t.delay] += t.power;
    }
    Ok(HermitianMatrix::from_real_diagonal(&diag))
}

/// Frequency-domain covariance obtained from a time-domain one through the
/// scaled DFT matrix: `F·R·F^H`.
pub fn time_to_freq_covariance<T: Real>(r_time: &HermitianMatrix<T>) -> Result<HermitianMatrix<T>> {
    r_time.congruence(&dft_matrix(r_time.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::ofdm_modulate;
    use crate::reference::brute_force_channel;
    use crate::scalar::max_abs_diff;

    type C = Complex<f64>;

    fn tap(delay: usize, power: f64, doppler: f64) -> Tap<f64> {
        Tap { delay, power, doppler }
    }

    #[test]
    fn model_validation() {
        assert!(ChannelModel::new(vec![tap(0, 0.5, 0.0)], Fading::Rayleigh).is_err());
        assert!(ChannelModel::new(vec![tap(2, 0.5, 0.0), tap(1, 0.5, 0.0)], Fading::Rayleigh).is_err());
        assert!(ChannelModel::<f64>::new(vec![], Fading::Rayleigh).is_err());
        let m = ChannelModel::normalized(vec![tap(0, 2.0, 0.0), tap(4, 2.0, 0.0)], Fading::Rayleigh).unwrap();
        assert_eq!(m.taps()[1].power, 0.5);
        let r = ChannelModel::<f64>::reference(0.0);
        assert!((r.taps().iter().map(|t| t.power).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(
            r.check_guard(8),
            Err(Error::DelayExceedsGuard { delay: 9, guard: 8 })
        ));
        assert!(r.check_guard(9).is_ok());
    }

    #[test]
    fn zero_power_tap_draws_zero_gain() {
        let m = ChannelModel::new(vec![tap(0, 1.0, 0.0), tap(3, 0.0, 0.0)], Fading::Rayleigh).unwrap();
        let c = draw_realization(&m, SeededStream::new(5, 5));
        assert_eq!(c.gains()[1], C::new(0.0, 0.0));
        assert_eq!(c, draw_realization(&m, SeededStream::new(5, 5)));
    }

    #[test]
    fn identity_channel() {
        let m = ChannelModel::<f64>::flat(Fading::Static);
        let c = draw_realization(&m, SeededStream::new(0, 0));
        let x: Vec<C> = (0..10).map(|i| C::new(i as f64, -(i as f64))).collect();
        assert_eq!(apply_channel(&x, &c, 2).unwrap(), x);
    }

    #[test]
    fn delayed_tap_is_circular_shift_in_window() {
        let m = ChannelModel::new(vec![tap(3, 1.0, 0.0)], Fading::Static).unwrap();
        let c = draw_realization(&m, SeededStream::new(0, 0));
        let freq: Vec<C> = (0..16)
            .map(|k| C::new((k as f64).sin(), (k as f64 * 0.3).cos()))
            .collect();
        let framed = ofdm_modulate(&freq, 4).unwrap();
        let y = apply_channel(&framed, &c, 4).unwrap();
        let x = &framed[4..];
        for n in 0..16 {
            assert!((y[4 + n] - x[(n + 16 - 3) % 16]).norm() < 1e-12);
        }
    }

    #[test]
    fn delay_beyond_guard_rejected() {
        let m = ChannelModel::new(vec![tap(5, 1.0, 0.0)], Fading::Static).unwrap();
        let c = draw_realization(&m, SeededStream::new(0, 0));
        assert!(matches!(
            apply_channel(&[C::new(1.0, 0.0); 20], &c, 4),
            Err(Error::DelayExceedsGuard { .. })
        ));
    }

    #[test]
    fn two_tap_doppler_matches_brute_force() {
        let m = ChannelModel::new(vec![tap(0, 0.6, 0.05), tap(3, 0.4, 0.05)], Fading::Rayleigh).unwrap();
        let c = draw_realization(&m, SeededStream::new(11, 1)).at(1234);
        let freq: Vec<C> = (0..64)
            .map(|k| C::new(((k * 7) % 5) as f64 - 2.0, ((k * 3) % 4) as f64 - 1.5))
            .collect();
        let framed = ofdm_modulate(&freq, 8).unwrap();
        let y = apply_channel(&framed, &c, 8).unwrap();
        let taps: Vec<_> = m
            .taps()
            .iter()
            .zip(c.gains())
            .map(|(t, &g)| (t.delay, g, t.doppler))
            .collect();
        let oracle = brute_force_channel(&framed, &taps, 8, 1234);
        assert!(max_abs_diff(&y, &oracle) < 1e-12);
    }

    #[test]
    fn awgn_limits() {
        let y = vec![C::new(1.0, 2.0); 4];
        let (z, v) = add_awgn(&y, f64::INFINITY, 1.0, SeededStream::new(1, 1)).unwrap();
        assert_eq!(z, y);
        assert_eq!(v, 0.0);
        let (_, v) = add_awgn(&y, 0.0, 1.0, SeededStream::new(1, 1)).unwrap();
        assert_eq!(v, 1.0);
        assert!(add_awgn(&y, 0.0, 0.0, SeededStream::new(1, 1)).is_err());
    }

    #[test]
    fn flat_response() {
        let m = ChannelModel::<f64>::flat(Fading::Static);
        let c = ChannelRealization::from_gains(m, vec![C::new(0.3, -0.7)], 0).unwrap();
        for h in freq_response(&c, 8) {
            assert!((h - C::new(0.3, -0.7)).norm() < 1e-15);
        }
    }

    #[test]
    fn no_doppler_no_ici() {
        let m = ChannelModel::<f64>::reference(0.0);
        let c = draw_realization(&m, SeededStream::new(2, 2));
        let x = vec![C::new(1.0, -1.0); 32];
        assert!(ici_term(&c, &x, 32).unwrap().iter().all(|z| z.norm() == 0.0));
        let m = ChannelModel::<f64>::reference(0.1);
        let c = draw_realization(&m, SeededStream::new(2, 2));
        assert!(ici_term(&c, &[C::new(0.0, 0.0); 32], 32)
            .unwrap()
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn correlation_special_cases() {
        let m = ChannelModel::<f64>::flat(Fading::Rayleigh);
        let r = freq_correlation(&m, 6);
        for i in 0..6 {
            for j in 0..6 {
                assert!((r[(i, j)] - C::new(1.0, 0.0)).norm() < 1e-15);
            }
        }
        let m = ChannelModel::new(vec![tap(0, 0.5, 0.0), tap(4, 0.5, 0.0)], Fading::Rayleigh).unwrap();
        let r = freq_correlation(&m, 8);
        for i in 0..8 {
            for j in 0..8 {
                let expect = if (i + 8 - j) % 2 == 0 { 1.0 } else { 0.0 };
                assert!((r[(i, j)] - C::new(expect, 0.0)).norm() < 1e-12);
            }
        }
        let g = time_correlation(&ChannelModel::<f64>::flat(Fading::Rayleigh), 4).unwrap();
        assert_eq!(
            g.as_matrix().diagonal(),
            vec![C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.0)]
        );
        assert!(
            (time_correlation(&ChannelModel::<f64>::reference(0.0), 16)
                .unwrap()
                .trace()
                - 1.0)
                .abs()
                < 1e-12
        );
    }
}

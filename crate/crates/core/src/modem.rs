//! Bit mapping, OFDM framing and zero-forcing equalization.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::numerics::{dft, idft};
use crate::scalar::Real;

/// Equalizer and pilot guard: channel or pilot magnitudes below this are errors.
pub const NEAR_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationKind {
    Bpsk,
    Qam16,
}

impl ConstellationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstellationKind::Bpsk => "bpsk",
            ConstellationKind::Qam16 => "qam16",
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            ConstellationKind::Bpsk => 1,
            ConstellationKind::Qam16 => 4,
        }
    }

    /// Unnormalized integer lattice coordinates, indexed by bit label.
    fn lattice(self) -> Vec<(i64, i64)> {
        match self {
            ConstellationKind::Bpsk => vec![(1, 0), (-1, 0)],
            ConstellationKind::Qam16 => (0..16)
                .map(|label: usize| (gray_level(label >> 2), gray_level(label & 3)))
                .collect(),
        }
    }

    /// β = E|x|²·E|1/x|² computed exactly on the integer lattice.
    ///
    /// β is invariant to the common scale factor, so the lattice value equals
    /// the value for the unit-energy alphabet.
    pub fn beta_exact(self) -> Ratio<i64> {
        let pts = self.lattice();
        let m = pts.len() as i64;
        let energy: Ratio<i64> = pts
            .iter()
            .map(|&(a, b)| Ratio::from_integer(a * a + b * b))
            .sum::<Ratio<i64>>()
            / m;
        let inverse: Ratio<i64> = pts
            .iter()
            .map(|&(a, b)| Ratio::new(1, a * a + b * b))
            .sum::<Ratio<i64>>()
            / m;
        energy * inverse
    }

    /// Stored β: 1 for BPSK, 17/9 for 16-QAM.
    pub fn beta_nominal(self) -> f64 {
        match self {
            ConstellationKind::Bpsk => 1.0,
            ConstellationKind::Qam16 => 17.0 / 9.0,
        }
    }
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(ConstellationKind::Bpsk),
            "qam16" | "16qam" | "16-qam" => Ok(ConstellationKind::Qam16),
            other => Err(Error::InvalidParameter(format!("unknown constellation {other:?}"))),
        }
    }
}

/// Per-axis Gray map for two bits: 00→−3, 01→−1, 11→+1, 10→+3.
fn gray_level(two_bits: usize) -> i64 {
    match two_bits & 3 {
        0b00 => -3,
        0b01 => -1,
        0b11 => 1,
        _ => 3,
    }
}

/// Unit-average-energy symbol alphabet with its bit labeling.
///
/// `points()[label]` is the symbol for the bit group whose MSB-first integer
/// value is `label`; this is also the canonical order used to break demapping
/// ties.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T> {
    kind: ConstellationKind,
    points: Vec<Complex<T>>,
    beta: T,
}

impl<T: Real> Constellation<T> {
    pub fn new(kind: ConstellationKind) -> Self {
        let lattice = kind.lattice();
        let energy = lattice.iter().map(|&(a, b)| (a * a + b * b) as f64).sum::<f64>() / lattice.len() as f64;
        let scale = 1.0 / energy.sqrt();
        let points = lattice
            .iter()
            .map(|&(a, b)| Complex::new(T::lit(a as f64 * scale), T::lit(b as f64 * scale)))
            .collect();
        Self {
            kind,
            points,
            beta: T::lit(kind.beta_nominal()),
        }
    }

    pub fn bpsk() -> Self {
        Self::new(ConstellationKind::Bpsk)
    }

    pub fn qam16() -> Self {
        Self::new(ConstellationKind::Qam16)
    }

    /// Replaces the stored β. Only for experiments and negative tests of the
    /// β-consistency check.
    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.kind.bits_per_symbol()
    }

    /// Stored β used by the simplified LMMSE regularizer.
    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn average_energy(&self) -> T {
        self.points.iter().map(|p| p.norm_sqr()).sum::<T>() / T::lit(self.points.len() as f64)
    }

    /// β recomputed from the points: `E|x|²·E|1/x|²`.
    pub fn beta_from_points(&self) -> T {
        let m = T::lit(self.points.len() as f64);
        let inv = self.points.iter().map(|p| T::one() / p.norm_sqr()).sum::<T>() / m;
        self.average_energy() * inv
    }

    /// Maps MSB-first bit groups to symbols.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex<T>>> {
        let k = self.bits_per_symbol();
        if !bits.len().is_multiple_of(k) {
            return Err(Error::RaggedBits {
                len: bits.len(),
                bits_per_symbol: k,
            });
        }
        bits.chunks(k)
            .map(|group| {
                let mut label = 0usize;
                for &b in group {
                    if b > 1 {
                        return Err(Error::InvalidBit(b));
                    }
                    label = (label << 1) | b as usize;
                }
                Ok(self.points[label])
            })
            .collect()
    }

    /// Index of the nearest point; ties go to the lowest index.
    pub fn nearest(&self, z: Complex<T>) -> usize {
        let mut best = 0;
        let mut best_d = (z - self.points[0]).norm_sqr();
        let slack = T::epsilon() * T::lit(64.0);
        for (i, p) in self.points.iter().enumerate().skip(1) {
            let d = (z - p).norm_sqr();
            if d < best_d - slack * best_d.max(T::one()) {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Hard-decision demapping to the bits of the nearest point.
    pub fn demap_symbols(&self, symbols: &[Complex<T>]) -> Vec<u8> {
        let k = self.bits_per_symbol();
        let mut out = Vec::with_capacity(symbols.len() * k);
        for &z in symbols {
            let label = self.nearest(z);
            for shift in (0..k).rev() {
                out.push(((label >> shift) & 1) as u8);
            }
        }
        out
    }
}

/// OFDM framing parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    pub fft_size: usize,
    /// Cyclic-prefix length in samples.
    pub guard: usize,
    /// Sorted, duplicate-free active carrier indices.
    pub active: Vec<usize>,
    /// OFDM symbols per pilot block (one pilot symbol plus `block_len - 1` data symbols).
    pub block_len: usize,
    pub constellation: ConstellationKind,
}

impl OfdmConfig {
    /// All carriers active.
    pub fn new(fft_size: usize, guard: usize, block_len: usize, constellation: ConstellationKind) -> Result<Self> {
        let cfg = Self {
            fft_size,
            guard,
            active: (0..fft_size).collect(),
            block_len,
            constellation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_active(mut self, mut active: Vec<usize>) -> Result<Self> {
        active.sort_unstable();
        active.dedup();
        self.active = active;
        self.validate()?;
        Ok(self)
    }

    /// `count` carriers centred on DC (wrapping): indices `0..⌈count/2⌉` and
    /// the top `⌊count/2⌋`.
    pub fn centered_active(fft_size: usize, count: usize) -> Vec<usize> {
        let lo = count.div_ceil(2).min(fft_size);
        let hi = (count / 2).min(fft_size - lo);
        (0..lo).chain(fft_size - hi..fft_size).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.fft_size == 0 {
            return Err(Error::InvalidConfig("fft size must be at least 1".into()));
        }
        if self.guard > self.fft_size {
            return Err(Error::GuardTooLong {
                guard: self.guard,
                fft_size: self.fft_size,
            });
        }
        if self.block_len == 0 {
            return Err(Error::InvalidConfig("block length must be at least 1".into()));
        }
        if self.active.is_empty() {
            return Err(Error::InvalidConfig("active carrier set is empty".into()));
        }
        if let Some(&k) = self.active.iter().find(|&&k| k >= self.fft_size) {
            return Err(Error::InvalidConfig(format!(
                "active carrier {k} outside 0..{}",
                self.fft_size
            )));
        }
        if self.active.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("active carriers must be sorted and unique".into()));
        }
        Ok(())
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.guard
    }

    pub fn all_active(&self) -> bool {
        self.active.len() == self.fft_size
    }
}

/// IDFT followed by cyclic-prefix insertion:
/// `[x(N−Ng) … x(N−1), x(0) … x(N−1)]`.
pub fn ofdm_modulate<T: Real>(freq: &[Complex<T>], guard: usize) -> Result<Vec<Complex<T>>> {
    let n = freq.len();
    if guard > n {
        return Err(Error::GuardTooLong { guard, fft_size: n });
    }
    let x = idft(freq)?;
    let mut out = Vec::with_capacity(n + guard);
    out.extend_from_slice(&x[n - guard..]);
    out.extend_from_slice(&x);
    Ok(out)
}

/// Cyclic-prefix removal followed by the scaled DFT.
pub fn ofdm_demodulate<T: Real>(received: &[Complex<T>], fft_size: usize, guard: usize) -> Result<Vec<Complex<T>>> {
    if received.len() != fft_size + guard {
        return Err(Error::DimensionMismatch {
            expected: fft_size + guard,
            got: received.len(),
        });
    }
    dft(&received[guard..])
}

/// Zero-forcing equalizer `X_e(k) = Y(k)/H_e(k)`.
pub fn equalize<T: Real>(received: &[Complex<T>], estimate: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if received.len() != estimate.len() {
        return Err(Error::DimensionMismatch {
            expected: received.len(),
            got: estimate.len(),
        });
    }
    let floor = T::lit(NEAR_ZERO);
    received
        .iter()
        .zip(estimate)
        .enumerate()
        .map(|(k, (&y, &h))| {
            let mag = h.norm();
            if !(mag >= floor) {
                return Err(Error::NearZeroChannel {
                    carrier: k,
                    magnitude: mag.to_f64_lossy(),
                });
            }
            Ok(y / h)
        })
        .collect()
}

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cis, Real};

/// Forward DFT with the `1/N` factor: `Y(k) = (1/N) Σ_n x(n) e^{-j2πkn/N}`.
pub fn dft<T: Real>(x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = x.to_vec();
    transform_in_place(&mut out, false);
    let scale = T::one() / T::lit(x.len() as f64);
    for z in &mut out {
        *z *= scale;
    }
    Ok(out)
}

/// Inverse DFT without scaling: `x(n) = Σ_k X(k) e^{j2πkn/N}`.
pub fn idft<T: Real>(x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = x.to_vec();
    transform_in_place(&mut out, true);
    Ok(out)
}

/// Unscaled transform with kernel `e^{∓j2πkn/N}`. Radix-2 when the length is
/// a power of two, direct summation otherwise.
fn transform_in_place<T: Real>(buf: &mut [Complex<T>], inverse: bool) {
    let n = buf.len();
    if n.is_power_of_two() {
        radix2(buf, inverse);
    } else {
        let src = buf.to_vec();
        let sign = if inverse { T::one() } else { -T::one() };
        let step = sign * T::TAU() / T::lit(n as f64);
        for (k, out) in buf.iter_mut().enumerate() {
            *out = src
                .iter()
                .enumerate()
                .map(|(i, &v)| v * cis(step * T::lit(((k * i) % n) as f64)))
                .fold(Complex::new(T::zero(), T::zero()), |acc, v| acc + v);
        }
    }
}

fn radix2<T: Real>(buf: &mut [Complex<T>], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { T::one() } else { -T::one() };
    // twiddles for the largest stage; smaller stages stride through them
    let twiddles: Vec<Complex<T>> = (0..n / 2)
        .map(|k| cis(sign * T::TAU() * T::lit(k as f64) / T::lit(n as f64)))
        .collect();
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
}

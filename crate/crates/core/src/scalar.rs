//! Real scalar abstraction shared by the generic modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};

/// Floating-point scalar usable by the numerical kernel: `f32` or `f64`.
pub trait Real: Float + FloatConst + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal or parameter into this type.
    fn lit(x: f64) -> Self;

    /// Widens to `f64`.
    fn to_f64_lossy(self) -> f64;

    /// Base tolerance for "numerically zero" relative comparisons.
    ///
    /// `1e-12` for `f64`; the precision floor of the type otherwise.
    fn tiny() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// `e^{j·theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Returns true when every component of every element is finite.
pub fn all_finite<T: Real>(v: &[Complex<T>]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(T::zero(), T::max)
}

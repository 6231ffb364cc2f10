//! The floating-point scalar abstraction used by every analytic routine.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use rustfft::FftNum;

/// Real scalar type for function tables, norms and spectra.
///
/// Implemented for `f32` and `f64`. All comparison tolerances in the crate
/// are expressed in `f64` and converted with [`Real::of`].
pub trait Real: Float + FloatConst + FftNum + Default + Display + Debug + Send + Sync {
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Conversion from a count, used when dividing sums by cardinalities.
    fn of_count(n: u64) -> Self {
        Self::of(n as f64)
    }
}

impl Real for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// `e^{2 pi i t}` for a real phase `t` measured in turns.
#[inline]
pub fn turn<T: Real>(t: f64) -> Complex<T> {
    // Reduce before converting so f32 tables keep their phase accuracy.
    let t = t - t.floor();
    let angle = T::of(t) * T::TAU();
    Complex::new(angle.cos(), angle.sin())
}

/// Relative/absolute closeness test used throughout the test suites.
pub fn approx_eq(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    let diff = (a - b).abs();
    diff <= abs || diff <= rel * a.abs().max(b.abs())
}

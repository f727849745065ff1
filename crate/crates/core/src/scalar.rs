//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar the signal model is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Default {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Default {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `e^{j theta}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

/// Relative deviation `|a - b| / max(|b|, floor)` for complex vectors, using
/// Euclidean norms over the whole vector.
pub fn relative_error<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> f64 {
    assert_eq!(a.len(), b.len(), "relative_error: length mismatch");
    let mut diff = 0.0;
    let mut reference = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = *x - *y;
        diff += to_f64(d.norm_sqr());
        reference += to_f64(y.norm_sqr());
    }
    diff.sqrt() / reference.sqrt().max(f64::MIN_POSITIVE)
}

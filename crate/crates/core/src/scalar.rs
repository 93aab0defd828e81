//! Scalar abstraction.
//!
//! Everything numeric in this crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Complex entries are `Complex<T>`.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display, LowerExp};

/// Real floating point scalar used throughout the crate.
pub trait Real:
    RealField
    + Copy
    + FromPrimitive
    + ToPrimitive
    + FloatConst
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Tolerance used for structural invariants (hermiticity, unit trace,
    /// identity at `t = 0`). `1e-12` for `f64`.
    fn default_tol() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-5
    }
}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;
/// Dense complex matrix.
pub type CMat<T> = DMatrix<Complex<T>>;
/// Dense complex column vector.
pub type CVec<T> = DVector<Complex<T>>;

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub(crate) fn ci<T: Real>(im: T) -> Complex<T> {
    Complex::new(T::zero(), im)
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

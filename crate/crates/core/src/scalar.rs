//! Scalar abstraction shared by the numerical routines.
//!
//! Everything in the crate is written against [`Real`], which is implemented
//! for `f32` and `f64`. The `*64` aliases at the crate root pin the usual
//! double-precision instantiation.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar usable throughout the simulator.
pub trait Real:
    Float + FloatConst + FromPrimitive + Default + Debug + Display + LowerExp + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for a complex amplitude over the scalar type.
pub type Cx<T> = Complex<T>;

/// Numerically stable `1 - tanh(x)`.
#[inline]
pub fn one_minus_tanh<T: Real>(x: T) -> T {
    if x > T::zero() {
        let e = (-(x + x)).exp();
        (e + e) / (T::one() + e)
    } else {
        T::one() - x.tanh()
    }
}

/// Numerically stable `1 + tanh(x)`.
#[inline]
pub fn one_plus_tanh<T: Real>(x: T) -> T {
    one_minus_tanh(-x)
}

/// Numerically stable `sech(x)`.
#[inline]
pub fn sech<T: Real>(x: T) -> T {
    let e = (-x.abs()).exp();
    (e + e) / (T::one() + e * e)
}

/// `ln(1 + c e^{2x})` for `c > 0`, without overflow for large `x`.
#[inline]
pub fn ln_one_plus_scaled_exp2<T: Real>(c: T, x: T) -> T {
    let log_ce = c.ln() + x + x;
    if log_ce > T::zero() {
        log_ce + (-log_ce).exp().ln_1p()
    } else {
        log_ce.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + e^{-x})`.
#[inline]
pub fn logistic<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

//! Scalar abstraction shared by the numerical code.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating point type the linear algebra runs on: `f32` or `f64`.
///
/// Conversions go through `num-traits`; arithmetic and decompositions
/// through `nalgebra::RealField`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + FromStr + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: RealField
        + Copy
        + FromPrimitive
        + ToPrimitive
        + Display
        + Debug
        + FromStr
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target scalar")
}

/// Lossy conversion to `f64`, used for reporting and persistence.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

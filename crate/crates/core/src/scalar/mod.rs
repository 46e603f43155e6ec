//! Scalar abstraction for the numeric core.
//!
//! All field evaluation, polynomial, Lyapunov, and stepping code is generic
//! over [`Scalar`]. `f32` and `f64` are the everyday instantiations;
//! [`DoubleDouble`] trades speed for ~106 bits of mantissa and is used where
//! an algebraic identity must survive catastrophic cancellation (the
//! generator cross-validation on friction functions with `exp(|x|^2)`
//! Hessians).

mod dd;

pub use dd::DoubleDouble;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar usable throughout the crate.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Lift an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 literal not representable in scalar type")
}

/// Lower a scalar to `f64` (for reports and serialization).
#[inline]
pub fn to_f64<T: Scalar>(v: T) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Lift a slice of `f64` into the working scalar type.
pub fn lift_slice<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| lit(x)).collect()
}

/// Lower a slice to `f64`.
pub fn lower_slice<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|&x| to_f64(x)).collect()
}

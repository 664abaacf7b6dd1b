//! Floating point scalar abstraction shared by the model, the losses and the optimizer.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the polarity model is parameterized over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossless widening used by the checkpoint writer.
    fn to_f64_exact(self) -> f64;

    /// Narrowing conversion (rounds for `f32`).
    fn from_f64_lossy(value: f64) -> Self;

    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl Scalar for f32 {
    fn to_f64_exact(self) -> f64 {
        f64::from(self)
    }

    fn from_f64_lossy(value: f64) -> Self {
        value as f32
    }
}

impl Scalar for f64 {
    fn to_f64_exact(self) -> f64 {
        self
    }

    fn from_f64_lossy(value: f64) -> Self {
        value
    }
}

/// Shorthand for converting configuration values (kept as `f64`) into the model scalar.
#[inline]
pub(crate) fn cast<T: Scalar>(value: f64) -> T {
    T::from_f64_lossy(value)
}

//! Scalar abstraction for the numeric kernels.
//!
//! All field values, coefficients and tolerances are generic over [`Real`].
//! `f64` is the working type of the CLI; `f32` instantiates for quick
//! smoke runs (the tight audit tolerances assume `f64`).

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the crate is generic over.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + Sum<Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Send
    + Sync
    + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + Sum<Self>
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + fmt::Debug
        + fmt::Display
        + fmt::LowerExp
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
#[inline]
pub fn real<S: Real>(x: f64) -> S {
    S::from_f64(x).expect("constant not representable in scalar type")
}

/// Views a scalar as `f64` for reporting and serialization.
#[inline]
pub fn as_f64<S: Real>(x: S) -> f64 {
    x.to_f64().expect("scalar not representable as f64")
}

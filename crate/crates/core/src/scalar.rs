//! Floating-point scalar abstraction for the solver stack.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the whole crate is generic over: `f32` or `f64`.
///
/// `LowerExp + FromStr` are required by the plain-text graph format, which
/// round-trips lengths through scientific notation.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for defaults and literals.
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable in scalar type")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + LowerExp
        + FromStr
        + Send
        + Sync
        + 'static
{
}

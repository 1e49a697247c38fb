//! Scalar abstraction: every numerical routine in this crate is generic over
//! [`Float`], implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable by the numerical kernels.
///
/// Beyond the arithmetic from `num_traits::Float`, this requires lossless-ish
/// construction from `f64` literals (coefficients of rational approximations,
/// tolerances) and thread-safety so sample loops can run under rayon.
pub trait Float:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Float for f32 {}
impl Float for f64 {}

/// Casts an `f64` constant into the working scalar type.
///
/// Panics only if the target type cannot represent any approximation of `x`,
/// which cannot happen for `f32`/`f64`.
#[inline(always)]
pub(crate) fn c<F: Float>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant must convert to the working scalar")
}

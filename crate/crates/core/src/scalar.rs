//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real scalar the explanation pipeline can run on.
///
/// Implemented for `f32` and `f64`. Everything the pipeline needs beyond
/// `num_traits::Float` (serialization, thread safety, a precision-aware
/// default solver tolerance) is gathered here so generic code carries a
/// single bound.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Gradient-norm tolerance used by the Newton solvers.
    const GRADIENT_TOLERANCE: f64;

    /// Converts an `f64` literal. Infallible for the supported types.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f64 {
    const GRADIENT_TOLERANCE: f64 = 1e-8;
}

impl Scalar for f32 {
    const GRADIENT_TOLERANCE: f64 = 1e-4;
}

//! Scalar abstraction for the numeric core.
//!
//! Every numeric routine in this crate (matrices, featurizers, learners,
//! metrics) is generic over a floating-point [`Scalar`] so the same code runs
//! in `f32` or `f64`. Concrete `f64` aliases for the common container types
//! live at the crate root; pipelines that care about memory can instantiate
//! the `f32` versions instead.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::distr::uniform::SampleUniform;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point element type for matrices, features, and model parameters.
///
/// The supertraits cover everything the numeric code needs: IEEE float
/// semantics ([`Float`]), conversions to and from `f64` for constants and
/// reporting, compound assignment, summation, uniform sampling, and the usual
/// thread-safety bounds so matrices can cross `rayon` task boundaries.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + SampleUniform
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    ///
    /// Used for literals inside generic code (`F::c(0.5)`); the conversion is
    /// lossy for `f32` in exactly the way an `as` cast would be.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant must be representable")
    }

    /// Widens to `f64` for accumulation, serialization, and display.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float widens to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

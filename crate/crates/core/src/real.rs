//! Scalar abstraction for the closed-form layers.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};

/// Floating point scalar used by the analytic kernels.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("representable literal")
    }

    /// Converts a count.
    #[inline]
    fn n(k: usize) -> Self {
        Self::from_usize(k).expect("representable count")
    }
}

impl Real for f32 {}
impl Real for f64 {}

//! Floating point abstraction shared by the model, the solvers and the policies.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used throughout the crate: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// Draws a uniform sample in `[0, 1)`.
    #[inline]
    fn uniform<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        Self::lit(rng.random::<f64>())
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

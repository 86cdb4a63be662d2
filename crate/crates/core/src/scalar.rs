use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Floating-point element type for tensors, embeddings and clustering.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Default + Debug + Display + Sum + Send + Sync + 'static
{
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;

    fn as_f32(self) -> f32 {
        self.as_f64() as f32
    }

    /// Round to the nearest value representable in single precision.
    fn round_to_f32(self) -> Self {
        Self::of(self.as_f32() as f64)
    }
}

impl Scalar for f32 {
    #[inline]
    fn of(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn as_f32(self) -> f32 {
        self
    }
}

impl Scalar for f64 {
    #[inline]
    fn of(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Anything the metric formulas can be evaluated in: floats or exact rationals.
pub trait MetricScalar: Num + FromPrimitive + Copy + PartialOrd + Debug {}

impl<T: Num + FromPrimitive + Copy + PartialOrd + Debug> MetricScalar for T {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_rounding_is_a_projection() {
        let x = 0.1f64.round_to_f32();
        assert_eq!(x, x.round_to_f32());
        assert_eq!(x, 0.1f32 as f64);
    }
}

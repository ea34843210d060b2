use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating-point type the model is evaluated in: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    /// Absolute tolerance for scalar root finding, floored at a few ulps of 1.
    fn root_tolerance() -> Self {
        let requested = Self::lit(1e-10);
        requested.max(Self::epsilon() * Self::lit(8.0))
    }

    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(value: f64) -> Self {
        <Self as NumCast>::from(value).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type the estimators are generic over.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Default threshold below which an annihilator diagonal entry is treated as zero.
    fn default_leverage_tol() -> Self;

    /// Converts an `f64` literal into this type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn default_leverage_tol() -> Self {
        1e-10
    }
}

impl Scalar for f32 {
    fn default_leverage_tol() -> Self {
        1e-5
    }
}

//! Scalar abstraction shared by the analytic modules.
//!
//! Everything analytic in this crate is written against [`Scalar`], so the
//! same code runs in `f32` or `f64`. The Monte Carlo side only needs to turn
//! probabilities into `f64` thresholds.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the analytic code.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for types that cannot represent
    /// finite `f64` values at all, which none of the supported types do.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Slack used when validating probabilities: values within this distance
    /// of `[0, 1]` are clamped, anything further out is rejected.
    #[inline]
    fn prob_slack() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(16.0))
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// `x * log2(x)` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn xlog2x<T: Scalar>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.log2()
    }
}

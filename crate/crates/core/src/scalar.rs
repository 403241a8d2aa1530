//! Scalar abstraction shared by every estimator in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar the numerical core is generic over (`f32` or `f64`).
///
/// Test statistics and p-values are always evaluated in `f64`; only the
/// data path (regressions, ICA, simulation buffers) follows `Self`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to every supported scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance below which a pivot or variance counts as zero.
    fn rank_tolerance() -> Self;
}

impl Scalar for f32 {
    fn rank_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn rank_tolerance() -> Self {
        1e-10
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_round_trips() {
        assert_eq!(f64::of(0.25), 0.25);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(0.5f32.as_f64(), 0.5);
    }
}

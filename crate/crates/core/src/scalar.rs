//! Scalar abstraction the rest of the crate is generic over.
//!
//! Every numeric routine in this crate works for both `f32` and `f64`
//! through the [`Real`] trait, which extends [`num_traits::Float`] with
//! the handful of special functions the density code needs.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used for densities, scores, and geometry.
///
/// Implemented for `f32` and `f64`. Code that needs a literal constant
/// should go through [`Real::cast`] so the same source works at both
/// precisions.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + core::fmt::Debug
    + core::fmt::Display
    + core::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// Complementary error function `erfc(x)`.
    fn erfc(self) -> Self;

    /// Convert an `f64` constant into this scalar type, rounding if needed.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("every finite f64 maps into a Real")
    }

    /// Standard normal CDF, `Phi(x) = erfc(-x / sqrt(2)) / 2`.
    fn std_normal_cdf(self) -> Self {
        Self::cast(0.5) * (-self / Self::cast(core::f64::consts::SQRT_2)).erfc()
    }

    /// Absolute tolerance for "sums to one" style validation checks,
    /// scaled so the same checks are meaningful at `f32` precision.
    fn mass_tolerance() -> Self {
        Self::cast(1e-12).max(Self::cast(100.0) * Self::epsilon())
    }
}

impl Real for f64 {
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_normal_cdf_matches_known_values() {
        // Reference values from standard normal tables.
        let cases = [
            (0.0, 0.5),
            (1.0, 0.841_344_746_068_543),
            (-1.0, 0.158_655_253_931_457),
            (1.959_963_984_540_054, 0.975),
            (-3.0, 1.349_898_031_630_095e-3),
        ];
        for (x, expect) in cases {
            let got = x.std_normal_cdf();
            assert!(
                (got - expect).abs() < 1e-12,
                "Phi({x}) = {got}, expected {expect}"
            );
        }
    }

    #[test]
    fn std_normal_cdf_saturates_in_the_tails() {
        assert_eq!((40.0f64).std_normal_cdf(), 1.0);
        assert_eq!((-40.0f64).std_normal_cdf(), 0.0);
    }

    #[test]
    fn f32_agrees_with_f64_to_single_precision() {
        for x in [-2.5f64, -0.3, 0.0, 0.7, 1.9] {
            let wide = x.std_normal_cdf();
            let narrow = (x as f32).std_normal_cdf();
            assert!((wide as f32 - narrow).abs() < 1e-6);
        }
    }
}

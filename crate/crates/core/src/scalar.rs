//! Floating-point abstraction shared by the numeric modules.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used by the network, the tree learners and t-SNE.
///
/// Implemented for `f32` and `f64`. `Display`/`FromStr` must round-trip
/// exactly, which both primitive floats guarantee; model files rely on it.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// IEEE total order, so sorts never panic on NaN.
    #[inline]
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.as_f64().total_cmp(&other.as_f64())
    }

    /// Logistic function, evaluated without overflow for large |x|.
    #[inline]
    fn sigmoid(self) -> Self {
        if self >= Self::zero() {
            Self::one() / (Self::one() + (-self).exp())
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric_and_saturates() {
        assert_eq!(0.0f64.sigmoid(), 0.5);
        let a = 3.7f64.sigmoid();
        let b = (-3.7f64).sigmoid();
        assert!((a + b - 1.0).abs() < 1e-15);
        assert!(1000.0f64.sigmoid() <= 1.0);
        assert!((-1000.0f64).sigmoid() >= 0.0);
        assert!((-1000.0f32).sigmoid().is_finite());
    }
}

//! Scalar abstraction for probabilities and potentials.
//!
//! Every table, potential and weight in the crate is generic over
//! [`Probability`], implemented for `f32` and `f64`. Network documents are
//! always parsed and validated in `f64` and then cast, so the tolerance checks
//! on load do not depend on the working precision.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Probability:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal or parsed value.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to every float type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }

    /// `a / b`, with `0 / 0` defined as zero (the clique-tree division rule).
    #[inline]
    fn safe_div(a: Self, b: Self) -> Self {
        if b == Self::zero() {
            Self::zero()
        } else {
            a / b
        }
    }
}

impl Probability for f32 {}
impl Probability for f64 {}

/// Normalizes `values` in place; returns the mass before normalization.
pub fn normalize<T: Probability>(values: &mut [T]) -> T {
    let total: T = values.iter().copied().sum();
    if total > T::zero() {
        for v in values.iter_mut() {
            *v = *v / total;
        }
    }
    total
}

/// Largest absolute difference between two equally sized distributions.
pub fn max_abs_diff<T: Probability>(a: &[T], b: &[T]) -> f64 {
    assert_eq!(a.len(), b.len(), "distributions differ in length");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.as_f64() - y.as_f64()).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn safe_div_zero_over_zero() {
        assert_eq!(f64::safe_div(0.0, 0.0), 0.0);
        assert_eq!(f32::safe_div(1.0, 2.0), 0.5);
    }

    #[test]
    fn normalize_reports_mass() {
        let mut v = [1.0f64, 3.0];
        assert_eq!(normalize(&mut v), 4.0);
        assert_eq!(v, [0.25, 0.75]);
        let mut z = [0.0f32, 0.0];
        assert_eq!(normalize(&mut z), 0.0);
        assert_eq!(z, [0.0, 0.0]);
    }
}

//! Scalar abstraction for the piecewise-polynomial (box) path.
//!
//! Step densities, their expected-time curve, the endpoint optimizer and the
//! maximum-likelihood fit only ever add, multiply and divide, so they run over
//! any ordered field: `f32`, `f64`, or exact rationals.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field element used by the exact box algebra.
pub trait Scalar:
    Num + Signed + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
    /// Converts a literal. Panics only if the type cannot represent it at all.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable in scalar type")
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + Signed + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
}

pub(crate) fn min_by_partial<T: PartialOrd + Copy>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

pub(crate) fn max_by_partial<T: PartialOrd + Copy>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    #[test]
    fn half_is_exact_for_rationals() {
        assert_eq!(Rational64::half(), Rational64::new(1, 2));
        assert_eq!(f32::half(), 0.5);
    }
}

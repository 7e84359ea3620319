//! Closed-form expected time for step (box) densities.

use crate::density::BoxDensity;
use crate::scalar::Scalar;

/// Coefficients of the quadratic piece of the expected-time curve that
/// contains `tau`: `ET(τ) = quadratic·τ² + linear·τ + constant`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticPiece<T> {
    pub quadratic: T,
    pub linear: T,
    pub constant: T,
}

impl<T: Scalar> QuadraticPiece<T> {
    pub fn eval(&self, tau: T) -> T {
        (self.quadratic * tau + self.linear) * tau + self.constant
    }
}

/// Classifies every box against `tau` (`τ ≤ a`, `a < τ < b`, `b ≤ τ`) and
/// sums its contribution to each coefficient.
pub fn piece_at<T: Scalar>(density: &BoxDensity<T>, tau: T) -> QuadraticPiece<T> {
    let half = T::half();
    let mut piece = QuadraticPiece { quadratic: T::zero(), linear: T::zero(), constant: T::zero() };
    for bx in &density.boxes {
        let (k, a, b, c, d) = (bx.k, bx.a, bx.b, bx.c, bx.d);
        let h = d - c;
        if tau <= a {
            piece.linear = piece.linear + k * (b - a) * h;
            piece.constant = piece.constant + half * k * (b - a) * (d * d - c * c);
        } else if tau < b {
            piece.quadratic = piece.quadratic - half * k * h;
            piece.linear = piece.linear + k * (b - half * (d + c)) * h;
            piece.constant = piece.constant + half * k * (b * (d + c) - a * a) * h;
        } else {
            piece.constant = piece.constant + half * k * (b * b - a * a) * h;
        }
    }
    piece
}

/// Exact expected derived time of a step density at switch time `tau`.
pub fn et_box<T: Scalar>(density: &BoxDensity<T>, tau: T) -> T {
    piece_at(density, tau).eval(tau)
}

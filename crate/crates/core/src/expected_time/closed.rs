//! Closed-form expected times for the parametric density families.

use num_traits::{Float, FromPrimitive};

use crate::density::{ExpPolyDensity, ProductDensity, RationalSeriesDensity};

fn lit<F: FromPrimitive>(v: f64) -> F {
    F::from_f64(v).expect("float literal")
}

/// Expected derived time for the exponential-polynomial family.
pub fn et_exp_poly<F: Float + FromPrimitive>(p: &ExpPolyDensity<F>, tau: F) -> F {
    let (a, b, c, d) = (p.a, p.b, p.c, p.d);
    let two: F = lit(2.0);
    let four: F = lit(4.0);
    let six: F = lit(6.0);
    let numerator = F::one() + two * a + b + six * c + two * d
        - (two * c * tau + a - b + four * c - four * d) * (-tau).exp();
    numerator / p.normalizer()
}

/// Expected derived time for the finite rational-series family.
///
/// Each term `d(m, n)` contributes a constant `1/(m+1)` (for `m ≥ 1`), the
/// `τ/(1+τ)` growth (for `m = 0`), and inverse powers of `1 + τ`; the heavy
/// `c`-component contributes `c/(1+τ) + c·ln(1+τ)`.
pub fn et_rational_series<F: Float + FromPrimitive>(p: &RationalSeriesDensity<F>, tau: F) -> F {
    let s = F::one() + tau;
    let row_sum = |m: usize| -> F {
        p.d.get(m).map_or(F::zero(), |row| row.iter().fold(F::zero(), |acc, &w| acc + w))
    };
    let row_weighted = |m: usize| -> F {
        p.d.get(m).map_or(F::zero(), |row| {
            row.iter()
                .enumerate()
                .fold(F::zero(), |acc, (n, &w)| acc + w / F::from_usize(n + 1).unwrap())
        })
    };
    let rows = p.d.len();
    let mut et = p.c / s + p.c * s.ln() + tau / s * row_sum(0);
    if rows > 1 {
        et = et + row_sum(1) / lit(2.0);
    }
    for m in 2..rows {
        et = et + row_sum(m) / F::from_usize(m + 1).unwrap();
    }
    // inverse powers (1+τ)^{-m} for m = 2 ..= rows + 1
    for m in 2..=rows + 1 {
        let coef = row_weighted(m - 2) - row_sum(m - 1) / F::from_usize(m).unwrap();
        et = et + coef / s.powi(m as i32);
    }
    et
}

/// `∫₀^τ x f₁(x) dx + P(τ < π₁)(τ + E π₂)` for independent runtimes.
pub fn et_product(p: &ProductDensity, tau: f64) -> f64 {
    p.fx().partial_moment(tau) + p.fx().survival(tau) * (tau + p.fy().mean())
}

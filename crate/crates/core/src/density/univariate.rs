//! One-dimensional runtime densities used as factors of product models.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnivariateDensity {
    /// Piecewise-constant density on disjoint `[lo, hi)` bins.
    Histogram { bins: Vec<Bin> },
    Exponential { rate: f64 },
    /// Linear interpolation between `(t, pdf)` knots, zero outside them.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl UnivariateDensity {
    pub fn exponential(rate: f64) -> Self {
        UnivariateDensity::Exponential { rate }
    }

    /// Uniform density on `[lo, hi)`.
    pub fn uniform(lo: f64, hi: f64) -> Self {
        UnivariateDensity::Histogram {
            bins: vec![Bin { lo, hi, height: 1.0 / (hi - lo) }],
        }
    }

    pub fn violations(&self, mass_tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            UnivariateDensity::Histogram { bins } => {
                if bins.is_empty() {
                    out.push("histogram has no bins".into());
                }
                for (i, b) in bins.iter().enumerate() {
                    if !(b.lo >= 0.0 && b.lo < b.hi && b.hi.is_finite()) {
                        out.push(format!("bin {}: need 0 <= lo < hi", i + 1));
                    }
                    if !(b.height >= 0.0 && b.height.is_finite()) {
                        out.push(format!("bin {}: height must be nonnegative", i + 1));
                    }
                }
                for i in 0..bins.len() {
                    for j in i + 1..bins.len() {
                        if bins[i].lo < bins[j].hi && bins[j].lo < bins[i].hi {
                            out.push(format!("bins {} and {} overlap", i + 1, j + 1));
                        }
                    }
                }
            }
            UnivariateDensity::Exponential { rate } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    out.push(format!("exponential rate {rate} must be positive"));
                }
                return out;
            }
            UnivariateDensity::Tabulated { knots } => {
                if knots.len() < 2 {
                    out.push("tabulated density needs at least two knots".into());
                }
                if knots.first().is_some_and(|k| k.0 < 0.0) {
                    out.push("tabulated support starts below 0".into());
                }
                if knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    out.push("tabulated knots must be strictly increasing".into());
                }
                if knots.iter().any(|k| !(k.1 >= 0.0 && k.1.is_finite())) {
                    out.push("tabulated pdf values must be nonnegative".into());
                }
            }
        }
        let mass = self.cdf(f64::INFINITY);
        if (mass - 1.0).abs() > mass_tol {
            out.push(format!("univariate mass {mass} differs from 1"));
        }
        out
    }

    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            UnivariateDensity::Histogram { bins } => bins
                .iter()
                .filter(|b| b.lo <= t && t < b.hi)
                .map(|b| b.height)
                .sum(),
            UnivariateDensity::Exponential { rate } => {
                if t < 0.0 {
                    0.0
                } else {
                    rate * (-rate * t).exp()
                }
            }
            UnivariateDensity::Tabulated { knots } => {
                let i = knots.partition_point(|k| k.0 <= t);
                if i == 0 || i == knots.len() {
                    if i == knots.len() && knots.last().is_some_and(|k| k.0 == t) {
                        return knots[i - 1].1;
                    }
                    return 0.0;
                }
                let (t0, p0) = knots[i - 1];
                let (t1, p1) = knots[i];
                p0 + (p1 - p0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// `P(π ≤ t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.segments_integral(
            t,
            |_, s, p0, slope| p0 * s + slope * s * s / 2.0,
            |rate, t| 1.0 - (-rate * t).exp(),
        )
    }

    pub fn survival(&self, t: f64) -> f64 {
        match self {
            UnivariateDensity::Exponential { rate } => (-rate * t.max(0.0)).exp(),
            _ => (1.0 - self.cdf(t)).max(0.0),
        }
    }

    /// `∫₀ᵗ x f(x) dx`.
    pub fn partial_moment(&self, t: f64) -> f64 {
        self.segments_integral(
            t,
            |lo, s, p0, slope| lo * p0 * s + (lo * slope + p0) * s * s / 2.0 + slope * s * s * s / 3.0,
            |rate, t| {
                if t.is_infinite() {
                    1.0 / rate
                } else {
                    (1.0 - (-rate * t).exp() * (1.0 + rate * t)) / rate
                }
            },
        )
    }

    pub fn mean(&self) -> f64 {
        self.partial_moment(f64::INFINITY)
    }

    /// Upper end of the support, `None` when unbounded.
    pub fn support_max(&self) -> Option<f64> {
        match self {
            UnivariateDensity::Histogram { bins } => bins.iter().map(|b| b.hi).reduce(f64::max),
            UnivariateDensity::Exponential { .. } => None,
            UnivariateDensity::Tabulated { knots } => knots.last().map(|k| k.0),
        }
    }

    // Integrates a polynomial-in-s weight over linear pdf segments up to `t`.
    // `seg(lo, s, p0, slope)` integrates from `lo` to `lo + s` where the pdf is
    // `p0 + slope·(x − lo)`.
    fn segments_integral(
        &self,
        t: f64,
        seg: impl Fn(f64, f64, f64, f64) -> f64,
        exp: impl Fn(f64, f64) -> f64,
    ) -> f64 {
        match self {
            UnivariateDensity::Histogram { bins } => bins
                .iter()
                .filter(|b| b.lo < t)
                .map(|b| seg(b.lo, b.hi.min(t) - b.lo, b.height, 0.0))
                .sum(),
            UnivariateDensity::Exponential { rate } => {
                if t <= 0.0 {
                    0.0
                } else {
                    exp(*rate, t)
                }
            }
            UnivariateDensity::Tabulated { knots } => knots
                .windows(2)
                .filter(|w| w[0].0 < t)
                .map(|w| {
                    let (t0, p0) = w[0];
                    let (t1, p1) = w[1];
                    let slope = (p1 - p0) / (t1 - t0);
                    seg(t0, t1.min(t) - t0, p0, slope)
                })
                .sum(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match self {
            UnivariateDensity::Exponential { rate } => -(1.0 - u).ln() / rate,
            UnivariateDensity::Histogram { bins } => {
                let total: f64 = bins.iter().map(|b| b.height * (b.hi - b.lo)).sum();
                let mut target = u * total;
                for b in bins {
                    let m = b.height * (b.hi - b.lo);
                    if target < m {
                        return b.lo + target / b.height;
                    }
                    target -= m;
                }
                bins.iter().rev().find(|b| b.height > 0.0).map_or(0.0, |b| b.hi)
            }
            UnivariateDensity::Tabulated { knots } => {
                let total = self.cdf(f64::INFINITY);
                let mut target = u * total;
                for w in knots.windows(2) {
                    let (t0, p0) = w[0];
                    let (t1, p1) = w[1];
                    let m = (p0 + p1) / 2.0 * (t1 - t0);
                    if target < m {
                        let slope = (p1 - p0) / (t1 - t0);
                        // root of p0·s + slope·s²/2 = target, stable form
                        let disc = (p0 * p0 + 2.0 * slope * target).max(0.0);
                        let s = 2.0 * target / (p0 + disc.sqrt());
                        return (t0 + s).min(t1);
                    }
                    target -= m;
                }
                knots.last().map_or(0.0, |k| k.0)
            }
        }
    }
}

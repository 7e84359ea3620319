//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use num_rational::Rational64;
use rand::Rng;

use switchover::density::{Rect, StepBox};
use switchover::mle::{BoxPartition, TimingSamples};
use switchover::BoxDensity;

pub const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Expected time of `12xy·exp(−(x+y)²)`, written out from its closed form.
pub fn sum_gaussian_et(t: f64) -> f64 {
    SQRT_PI * (libm::erf(t) - 1.0) * (t.powi(4) + 1.5 * t * t) + (t.powi(3) + t) * (-t * t).exp() + 0.375 * SQRT_PI
}

/// Expected time of `48xy·exp(−4x² − 3y²)`.
pub fn anisotropic_et(t: f64) -> f64 {
    0.25 * SQRT_PI * libm::erf(2.0 * t) + (3.0 * std::f64::consts::PI).sqrt() / 6.0 * (-4.0 * t * t).exp()
}

/// Two boxes of height 1/12 on `[1,3)×[4,7)` and `[5,8)×[2,4)`.
pub fn two_box() -> BoxDensity<f64> {
    let k = 1.0 / 12.0;
    BoxDensity::new(vec![StepBox::new(k, 1.0, 3.0, 4.0, 7.0), StepBox::new(k, 5.0, 8.0, 2.0, 4.0)])
}

pub fn two_box_exact() -> BoxDensity<Rational64> {
    let r = Rational64::from_integer;
    let k = Rational64::new(1, 12);
    BoxDensity::new(vec![StepBox::new(k, r(1), r(3), r(4), r(7)), StepBox::new(k, r(5), r(8), r(2), r(4))])
}

/// Sorted cut points: 0 ≤ c₀ < c₁ < … on a random scale.
fn random_cuts<R: Rng>(rng: &mut R, max_cells: usize) -> Vec<f64> {
    let n = rng.random_range(1..=max_cells);
    let mut t = rng.random::<f64>() * 2.0;
    let mut out = vec![t];
    for _ in 0..n {
        t += 0.05 + rng.random::<f64>() * 3.0;
        out.push(t);
    }
    out
}

/// Random disjoint cells of a random grid with random normalized heights.
pub fn random_box_density<R: Rng>(rng: &mut R) -> BoxDensity<f64> {
    let xs = random_cuts(rng, 5);
    let ys = random_cuts(rng, 5);
    let mut cells = Vec::new();
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            if cells.is_empty() || rng.random::<f64>() < 0.6 {
                cells.push((Rect::new(xw[0], xw[1], yw[0], yw[1]), 0.05 + rng.random::<f64>()));
            }
        }
    }
    let total: f64 = cells.iter().map(|c| c.1).sum();
    BoxDensity::new(cells.into_iter().map(|(r, w)| StepBox::from_rect(w / total / r.area(), r)).collect())
}

/// A random grid partition and samples placed inside it, some cells empty.
pub fn random_partition_counts<R: Rng>(rng: &mut R) -> (BoxPartition<f64>, TimingSamples<f64>) {
    let xs = random_cuts(rng, 4);
    let ys = random_cuts(rng, 4);
    let part = BoxPartition::from_cuts(&xs, &ys).expect("grid partition");
    let mut pairs = Vec::new();
    for r in part.rects() {
        let s = if rng.random::<f64>() < 0.3 { 0 } else { rng.random_range(1..20) };
        for _ in 0..s {
            let x = r.a + rng.random::<f64>() * (r.b - r.a) * 0.999;
            let y = r.c + rng.random::<f64>() * (r.d - r.c) * 0.999;
            pairs.push((x.max(1e-9), y.max(1e-9)));
        }
    }
    if pairs.is_empty() {
        let r = part.rects()[0];
        pairs.push((0.5 * (r.a + r.b), 0.5 * (r.c + r.d)));
    }
    (part, TimingSamples::new(pairs).expect("positive samples"))
}

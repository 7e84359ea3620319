//! Direct 2-D quadrature of
//! `∫₀^τ ∫₀^∞ x f dy dx + ∫_τ^∞ ∫₀^∞ (τ + y) f dy dx` on truncated domains.

use super::{EtMethod, EtResult};
use crate::density::{ColumnMoments, Expectation, JointDensity, GRID_DOUBLINGS};
use crate::error::{Error, Result};
use crate::quadrature::{assess_levels, geometric_breaks, integrate, QuadConfig};

/// Density-specific discontinuities along each axis.
pub(crate) fn breakpoints(density: &JointDensity) -> (Vec<f64>, Vec<f64>) {
    use crate::density::UnivariateDensity as U;
    let uni = |u: &U| -> Vec<f64> {
        match u {
            U::Histogram { bins } => bins.iter().flat_map(|b| [b.lo, b.hi]).collect(),
            U::Tabulated { knots } => knots.iter().map(|k| k.0).collect(),
            U::Exponential { .. } => Vec::new(),
        }
    };
    match density {
        JointDensity::Box(d) => (
            d.boxes.iter().flat_map(|b| [b.a, b.b]).collect(),
            d.boxes.iter().flat_map(|b| [b.c, b.d]).collect(),
        ),
        JointDensity::Product(p) => (uni(p.fx()), uni(p.fy())),
        JointDensity::Grid(g) => (g.x_knots.clone(), g.y_knots.clone()),
        _ => (Vec::new(), Vec::new()),
    }
}

/// Smallest truncation bound that contains every bounded support.
pub(crate) fn base_truncation(density: &JointDensity, cfg: &QuadConfig) -> f64 {
    let (xs, ys) = breakpoints(density);
    xs.iter().chain(&ys).copied().fold(cfg.t_max, f64::max)
}

/// Integrates `weight(x, y) · f(x, y)` over `x ∈ [x_lo, x_hi]`, `y ∈ [0, t]`.
pub(crate) fn integrate_region(
    density: &JointDensity,
    weight: impl Fn(f64, f64) -> f64,
    (x_lo, x_hi): (f64, f64),
    t: f64,
    cfg: &QuadConfig,
) -> f64 {
    if x_hi <= x_lo {
        return 0.0;
    }
    let (xb, yb) = breakpoints(density);
    let mut x_breaks: Vec<f64> = geometric_breaks(t, &xb)
        .into_iter()
        .filter(|&x| x > x_lo && x < x_hi)
        .collect();
    x_breaks.push(x_lo);
    x_breaks.push(x_hi);
    x_breaks.sort_by(f64::total_cmp);
    let y_breaks = geometric_breaks(t, &yb);
    let pdf = |x: f64, y: f64| density.pdf(x, y).unwrap_or(0.0);
    let inner = |x: f64| {
        integrate(
            |y: f64| weight(x, y) * pdf(x, y),
            &y_breaks,
            cfg.abs_tol * 0.1,
            cfg.rel_tol,
            cfg.max_panels,
        )
        .value
    };
    integrate(inner, &x_breaks, cfg.abs_tol, cfg.rel_tol, cfg.max_panels).value
}

/// `ET(τ₁)` by adaptive quadrature, with the truncation-doubling existence test.
pub fn et_quadrature(density: &JointDensity, tau: f64, cfg: &QuadConfig) -> Result<EtResult> {
    density.ensure_valid()?;
    if density.dimension() != 2 {
        return Err(Error::Contract("quadrature ET needs a two-algorithm density".into()));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Contract(format!("switch time {tau} must be finite and nonnegative")));
    }
    if let JointDensity::Grid(g) = density {
        // piecewise-constant cells integrate exactly column by column
        let levels = g
            .truncation_levels(GRID_DOUBLINGS)
            .unwrap_or_else(|| vec![g.column_moments()]);
        return Ok(EtResult { value: grid_et(&levels, tau, cfg), method: EtMethod::Quadrature, stderr: None });
    }
    let t0 = base_truncation(density, cfg);
    let (settled, tail): (Vec<f64>, Vec<f64>) = (0..=cfg.doublings)
        .map(|k| {
            let t = t0 * f64::from(1u32 << k);
            let below = integrate_region(density, |x, _| x, (0.0, tau.min(t)), t, cfg);
            let survival = integrate_region(density, |_, _| 1.0, (tau, t), t, cfg);
            let second = integrate_region(density, |_, y| y, (tau, t), t, cfg);
            (below + tau * survival, second)
        })
        .unzip();
    let value = match (assess_levels(&settled, cfg, true), assess_levels(&tail, cfg, true)) {
        (Expectation::Finite(a), Expectation::Finite(b)) => Expectation::Finite(a + b),
        _ => Expectation::Divergent,
    };
    Ok(EtResult { value, method: EtMethod::Quadrature, stderr: None })
}

/// `ET(τ)` of a tabulated density from its truncation levels.
///
/// `ET = E[π₁; π₁ ≤ τ] + τ P(π₁ > τ) + E[π₂; π₁ > τ]`. The first two terms are
/// bounded by `τ`, so existence hinges on the last one alone and the doubling
/// test is applied to it rather than to the total, where a slowly growing
/// term would be masked once `τ` is large.
pub(crate) fn grid_et(levels: &[ColumnMoments], tau: f64, cfg: &QuadConfig) -> Expectation {
    let tail: Vec<f64> = levels.iter().map(|m| m.split_moments(tau).1).collect();
    assess_levels(&tail, cfg, false).map(|_| levels[0].et(tau))
}

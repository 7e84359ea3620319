//! Choosing the switch time `τ₁` that minimizes expected derived time.

use std::fmt;

use serde::Serialize;

use crate::density::{Axis, BoxDensity, Expectation, JointDensity};
use crate::error::{Error, Result};
use crate::expected_time::{et_box, EtEvaluator};
use crate::io::fmt_num;
use crate::mle::TimingSamples;
use crate::quadrature::QuadConfig;
use crate::scalar::{min_by_partial, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Candidate<T = f64> {
    pub tau: T,
    pub et: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationReport<T = f64> {
    pub tau_star: T,
    pub et_star: T,
    pub e_pi1: Expectation<T>,
    pub e_pi2: Expectation<T>,
    /// `1 − ET* / min(E π₁, E π₂)`; `None` when neither mean exists.
    pub relative_gain: Option<T>,
    pub candidates: Vec<Candidate<T>>,
}

impl<T: Scalar> OptimizationReport<T> {
    fn from_candidates(candidates: Vec<Candidate<T>>, e_pi1: Expectation<T>, e_pi2: Expectation<T>) -> Self {
        // strict comparison keeps the smallest tau among ties
        let best = candidates
            .iter()
            .copied()
            .reduce(|best, c| {
                if c.et < best.et || (c.et == best.et && c.tau < best.tau) {
                    c
                } else {
                    best
                }
            })
            .expect("at least one candidate");
        let baseline = match (e_pi1.finite(), e_pi2.finite()) {
            (Some(a), Some(b)) => Some(min_by_partial(a, b)),
            (Some(a), None) => Some(a),
            (None, b) => b,
        };
        OptimizationReport {
            tau_star: best.tau,
            et_star: best.et,
            e_pi1,
            e_pi2,
            relative_gain: baseline.map(|m| T::one() - best.et / m),
            candidates,
        }
    }

    pub fn to_f64(&self) -> OptimizationReport<f64> {
        let f = |v: T| v.to_f64_lossy();
        OptimizationReport {
            tau_star: f(self.tau_star),
            et_star: f(self.et_star),
            e_pi1: self.e_pi1.map(f),
            e_pi2: self.e_pi2.map(f),
            relative_gain: self.relative_gain.map(f),
            candidates: self.candidates.iter().map(|c| Candidate { tau: f(c.tau), et: f(c.et) }).collect(),
        }
    }
}

impl fmt::Display for OptimizationReport<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tau*           {}", fmt_num(self.tau_star))?;
        writeln!(f, "ET(tau*)       {}", fmt_num(self.et_star))?;
        writeln!(f, "E pi_1         {}", self.e_pi1)?;
        writeln!(f, "E pi_2         {}", self.e_pi2)?;
        match self.relative_gain {
            Some(g) => writeln!(f, "relative gain  {}", fmt_num(g))?,
            None => writeln!(f, "relative gain  n/a")?,
        }
        writeln!(f, "{} candidates evaluated", self.candidates.len())
    }
}

/// Global minimum of the expected-time curve of a step density.
///
/// The curve is continuous and piecewise quadratic with concave (or linear)
/// pieces joined at box edges, so its minimum sits at a box edge. Every `a_n`,
/// `b_n` and `τ = 0` is evaluated: `O(N²)` work for `N` boxes.
pub fn optimize_box<T: Scalar>(density: &BoxDensity<T>) -> Result<OptimizationReport<T>> {
    let problems = density.violations(T::lit(1e-9));
    if !problems.is_empty() {
        return Err(Error::InvalidDensity(crate::density::ValidationReport {
            violations: problems,
            mass: density.mass().to_f64(),
        }));
    }
    let mut taus: Vec<T> = std::iter::once(T::zero())
        .chain(density.boxes.iter().flat_map(|b| [b.a, b.b]))
        .collect();
    taus.sort_by(|x, y| x.partial_cmp(y).expect("ordered scalars"));
    taus.dedup();
    let candidates = taus.into_iter().map(|tau| Candidate { tau, et: et_box(density, tau) }).collect();
    Ok(OptimizationReport::from_candidates(
        candidates,
        Expectation::Finite(density.mean_x()),
        Expectation::Finite(density.mean_y()),
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanConfig {
    /// Defaults to `[0, x-support upper bound]`, or `[0, t_max]` for unbounded support.
    pub range: Option<(f64, f64)>,
    pub grid_points: usize,
    pub refine_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { range: None, grid_points: 512, refine_tol: 1e-4 }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Coarse grid scan of `ET(τ)` followed by golden-section refinement around
/// the best grid point.
pub fn optimize_scan(evaluator: &EtEvaluator<'_>, quad: &QuadConfig, cfg: &ScanConfig) -> Result<OptimizationReport> {
    let density = evaluator.density();
    let (lo, hi) = cfg
        .range
        .unwrap_or_else(|| (0.0, density.x_support_max().unwrap_or(quad.t_max)));
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) || cfg.grid_points < 2 || !(cfg.refine_tol > 0.0) {
        return Err(Error::Contract(format!(
            "scan needs 0 <= lo < hi, at least 2 grid points and a positive tolerance (got [{lo}, {hi}], {} points)",
            cfg.grid_points
        )));
    }
    let eval = |tau: f64| -> Result<f64> {
        evaluator
            .et(tau)?
            .finite()
            .ok_or_else(|| Error::Divergent(format!("ET is undefined at tau = {tau}")))
    };
    let n = cfg.grid_points;
    let step = (hi - lo) / (n - 1) as f64;
    let mut candidates = Vec::with_capacity(n + 64);
    for i in 0..n {
        let tau = if i == n - 1 { hi } else { lo + step * i as f64 };
        candidates.push(Candidate { tau, et: eval(tau)? });
    }
    let best = (0..n).fold(0, |b, i| if candidates[i].et < candidates[b].et { i } else { b });
    let (mut a, mut b) = (candidates[best.saturating_sub(1)].tau, candidates[(best + 1).min(n - 1)].tau);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
    candidates.push(Candidate { tau: x1, et: f1 });
    candidates.push(Candidate { tau: x2, et: f2 });
    while b - a > cfg.refine_tol {
        if f1 <= f2 {
            b = x2;
            (x2, f2) = (x1, f1);
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?;
            candidates.push(Candidate { tau: x1, et: f1 });
        } else {
            a = x1;
            (x1, f1) = (x2, f2);
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?;
            candidates.push(Candidate { tau: x2, et: f2 });
        }
    }
    Ok(OptimizationReport::from_candidates(
        candidates,
        density.marginal_mean(Axis::X, quad),
        density.marginal_mean(Axis::Y, quad),
    ))
}

/// Endpoint enumeration for step densities, grid scan otherwise.
pub fn optimize(density: &JointDensity, quad: &QuadConfig, scan: &ScanConfig) -> Result<OptimizationReport> {
    match density {
        JointDensity::Box(d) => optimize_box(d),
        _ => optimize_scan(&EtEvaluator::new(density, quad)?, quad, scan),
    }
}

/// Index (1 or 2) of an algorithm that is at least as fast on every observed
/// task; ties favour algorithm 1. A portfolio can only help when this is `None`.
pub fn dominance_check(samples: &TimingSamples) -> Option<usize> {
    let pairs = samples.pairs();
    if pairs.iter().all(|(x, y)| x <= y) {
        Some(1)
    } else if pairs.iter().all(|(x, y)| y <= x) {
        Some(2)
    } else {
        None
    }
}

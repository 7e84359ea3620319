//! Term-by-term expected time: each algorithm's conditional contribution plus
//! the budgets charged on survival events.
//!
//! With `S_n` the event that algorithms `1..=n` all outlive their budgets,
//! `ET = Σ_n E[π_n ; S_{n−1} ∖ S_n] + Σ_n τ_n P(S_n)` (with `S_0 = Ω` and the
//! last stage taking all of `S_{N−1}`). Summing these pieces must reproduce
//! the direct expected time.

use serde::Serialize;

use super::quadrature2d::{base_truncation, integrate_region};
use crate::density::{Expectation, JointDensity, GRID_DOUBLINGS};
use crate::error::{Error, Result};
use crate::quadrature::{assess_levels, QuadConfig};
use crate::schedule::Schedule;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTerm {
    /// 1-based algorithm index.
    pub stage: usize,
    /// `P(S_{n−1} ∖ S_n)`: probability that this stage is the one that completes.
    pub probability: f64,
    /// `(E π_n | S_{n−1} ∖ S_n) · P(S_{n−1} ∖ S_n)`.
    pub conditional_term: Expectation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermDecomposition {
    /// `P(S_n)` for `n = 1..N−1`.
    pub survival: Vec<f64>,
    pub stages: Vec<StageTerm>,
    /// `τ_n · P(S_n)`.
    pub budget_terms: Vec<f64>,
    /// Sum of every term.
    pub total: Expectation,
}

impl TermDecomposition {
    fn assemble(survival: Vec<f64>, stages: Vec<StageTerm>, taus: &[f64]) -> Self {
        let budget_terms: Vec<f64> = taus.iter().zip(&survival).map(|(t, p)| t * p).collect();
        let budget: f64 = budget_terms.iter().sum();
        let total = stages.iter().try_fold(budget, |acc, s| s.conditional_term.finite().map(|v| acc + v));
        TermDecomposition {
            survival,
            stages,
            budget_terms,
            total: total.map_or(Expectation::Divergent, Expectation::Finite),
        }
    }
}

fn two_stage(p_s1: f64, first: f64, second: Expectation, tau: f64) -> TermDecomposition {
    TermDecomposition::assemble(
        vec![p_s1],
        vec![
            StageTerm { stage: 1, probability: 1.0 - p_s1, conditional_term: Expectation::Finite(first) },
            StageTerm { stage: 2, probability: p_s1, conditional_term: second },
        ],
        &[tau],
    )
}

/// Decomposes `ET` for `schedule` into its per-stage terms.
///
/// Two-algorithm densities of every form are supported (exactly for step,
/// grid and product densities, by quadrature otherwise); longer schedules
/// need an independent product density.
pub fn stage_terms(
    density: &JointDensity,
    schedule: &Schedule,
    cfg: &QuadConfig,
) -> Result<TermDecomposition> {
    density.ensure_valid()?;
    if density.dimension() != schedule.portfolio_size() {
        return Err(Error::Contract(format!(
            "schedule drives {} algorithms but the density describes {}",
            schedule.portfolio_size(),
            density.dimension()
        )));
    }
    let taus = schedule.budgets();
    match density {
        JointDensity::Product(p) => {
            let mut survival = Vec::with_capacity(taus.len());
            let mut stages = Vec::with_capacity(p.factors.len());
            let mut alive = 1.0;
            for (n, f) in p.factors.iter().enumerate() {
                match taus.get(n) {
                    Some(&tau) => {
                        stages.push(StageTerm {
                            stage: n + 1,
                            probability: alive * f.cdf(tau),
                            conditional_term: Expectation::Finite(alive * f.partial_moment(tau)),
                        });
                        alive *= f.survival(tau);
                        survival.push(alive);
                    }
                    None => stages.push(StageTerm {
                        stage: n + 1,
                        probability: alive,
                        conditional_term: Expectation::Finite(alive * f.mean()),
                    }),
                }
            }
            Ok(TermDecomposition::assemble(survival, stages, taus))
        }
        JointDensity::Box(d) => {
            let tau = taus[0];
            let (mut first, mut second) = (0.0, 0.0);
            for b in &d.boxes {
                let h = b.d - b.c;
                if b.a < tau {
                    first += b.k * h * 0.5 * (b.b.min(tau).powi(2) - b.a * b.a);
                }
                if tau < b.b {
                    second += b.k * 0.5 * (b.d * b.d - b.c * b.c) * (b.b - b.a.max(tau));
                }
            }
            Ok(two_stage(d.survival_x(tau), first, Expectation::Finite(second), tau))
        }
        JointDensity::Grid(g) => {
            let tau = taus[0];
            let levels = g
                .truncation_levels(GRID_DOUBLINGS)
                .unwrap_or_else(|| vec![g.column_moments()]);
            let (first, second) = levels[0].split_moments(tau);
            let seconds: Vec<f64> = levels.iter().map(|m| m.split_moments(tau).1).collect();
            let second = assess_levels(&seconds, cfg, false).map(|_| second);
            Ok(two_stage(levels[0].survival_x(tau), first, second, tau))
        }
        JointDensity::ExpPoly(_) | JointDensity::RationalSeries(_) => {
            let tau = taus[0];
            let t0 = base_truncation(density, cfg);
            let mut p_s1 = Vec::new();
            let mut firsts = Vec::new();
            let mut seconds = Vec::new();
            for k in 0..=cfg.doublings {
                let t = t0 * f64::from(1u32 << k);
                firsts.push(integrate_region(density, |x, _| x, (0.0, tau.min(t)), t, cfg));
                seconds.push(integrate_region(density, |_, y| y, (tau, t), t, cfg));
                p_s1.push(integrate_region(density, |_, _| 1.0, (tau, t), t, cfg));
            }
            let survival = assess_levels(&p_s1, cfg, true)
                .finite()
                .ok_or_else(|| Error::Divergent("survival probability did not settle".into()))?;
            let first = assess_levels(&firsts, cfg, true);
            let first = first.finite().ok_or_else(|| {
                Error::Divergent("conditional mean of the first algorithm".into())
            })?;
            Ok(two_stage(survival, first, assess_levels(&seconds, cfg, true), tau))
        }
    }
}

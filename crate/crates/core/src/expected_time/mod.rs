//! Expected execution time `ET(τ)` of the derived algorithm.
//!
//! Three routes: closed forms (step, product, exponential-polynomial and
//! rational-series densities), adaptive 2-D quadrature of the defining
//! integral for any two-algorithm density, and Monte Carlo over sampled
//! runtimes for any sampleable density and schedule.

mod closed;
mod decomposition;
mod monte_carlo;
mod quadrature2d;
mod step;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use closed::{et_exp_poly, et_product, et_rational_series};
pub use decomposition::{stage_terms, StageTerm, TermDecomposition};
pub use monte_carlo::{et_monte_carlo, McConfig};
pub use quadrature2d::et_quadrature;
pub use step::{et_box, piece_at, QuadraticPiece};

use crate::density::{ColumnMoments, Expectation, JointDensity, GRID_DOUBLINGS};
use crate::error::{Error, Result};
use crate::quadrature::QuadConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for EtMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EtMethod::ClosedForm => "closed_form",
            EtMethod::Quadrature => "quadrature",
            EtMethod::MonteCarlo => "monte_carlo",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtResult {
    pub value: Expectation,
    pub method: EtMethod,
    /// Standard error of the estimate (Monte Carlo only).
    pub stderr: Option<f64>,
}

impl EtResult {
    pub fn exact(value: f64, method: EtMethod) -> Self {
        EtResult { value: Expectation::Finite(value), method, stderr: None }
    }

    pub fn divergent(method: EtMethod) -> Self {
        EtResult { value: Expectation::Divergent, method, stderr: None }
    }

    pub fn finite(&self) -> Option<f64> {
        self.value.finite()
    }
}

/// A two-algorithm density prepared for repeated `ET(τ₁)` evaluation, using
/// the cheapest exact route the density form allows.
#[derive(Debug)]
pub struct EtEvaluator<'a> {
    density: &'a JointDensity,
    cfg: QuadConfig,
    grid_levels: Option<Vec<ColumnMoments>>,
}

impl<'a> EtEvaluator<'a> {
    pub fn new(density: &'a JointDensity, cfg: &QuadConfig) -> Result<Self> {
        density.ensure_valid()?;
        if density.dimension() != 2 {
            return Err(Error::Contract(format!(
                "ET(tau1) needs a two-algorithm density, got {} algorithms",
                density.dimension()
            )));
        }
        let grid_levels = match density {
            JointDensity::Grid(g) => Some(
                g.truncation_levels(GRID_DOUBLINGS)
                    .unwrap_or_else(|| vec![g.column_moments()]),
            ),
            _ => None,
        };
        Ok(EtEvaluator { density, cfg: cfg.clone(), grid_levels })
    }

    pub fn density(&self) -> &JointDensity {
        self.density
    }

    pub fn et(&self, tau: f64) -> Result<EtResult> {
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::Contract(format!("switch time {tau} must be finite and nonnegative")));
        }
        Ok(match self.density {
            JointDensity::Box(d) => EtResult::exact(et_box(d, tau), EtMethod::ClosedForm),
            JointDensity::Product(p) => EtResult::exact(et_product(p, tau), EtMethod::ClosedForm),
            JointDensity::ExpPoly(p) => EtResult::exact(et_exp_poly(p, tau), EtMethod::ClosedForm),
            JointDensity::RationalSeries(p) => {
                EtResult::exact(et_rational_series(p, tau), EtMethod::ClosedForm)
            }
            JointDensity::Grid(_) => {
                let levels = self.grid_levels.as_deref().unwrap_or_default();
                EtResult { value: quadrature2d::grid_et(levels, tau, &self.cfg), method: EtMethod::Quadrature, stderr: None }
            }
        })
    }
}

/// `ET(τ₁)` by the preferred route for the density form.
pub fn expected_time(density: &JointDensity, tau: f64, cfg: &QuadConfig) -> Result<EtResult> {
    EtEvaluator::new(density, cfg)?.et(tau)
}

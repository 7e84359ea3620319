//! Joint runtime densities over the nonnegative quadrant.

mod boxes;
mod exp_poly;
mod grid;
mod product;
mod rational;
mod sampling;
mod univariate;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use boxes::{BoxDensity, Rect, StepBox};
pub use exp_poly::ExpPolyDensity;
pub use grid::{uniform_knots, ColumnMoments, GridDensity, GridGenerator, GridSource, Spacing, TWIN_PEAKS_NORMALIZER};
pub use product::ProductDensity;
pub use rational::RationalSeriesDensity;
pub use sampling::Sampler;
pub(crate) use sampling::rng_for;
pub use univariate::{Bin, UnivariateDensity};

use crate::error::{Error, Result};
use crate::quadrature::{assess_levels, QuadConfig};

/// An expectation that may fail to exist.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation<T = f64> {
    Finite(T),
    Divergent,
}

impl<T: Copy> Expectation<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Expectation::Finite(v) => Some(v),
            Expectation::Divergent => None,
        }
    }

    pub fn is_divergent(&self) -> bool {
        matches!(self, Expectation::Divergent)
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Expectation<U> {
        match self {
            Expectation::Finite(v) => Expectation::Finite(f(v)),
            Expectation::Divergent => Expectation::Divergent,
        }
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expectation::Finite(v) => f.write_str(&crate::io::fmt_num(*v)),
            Expectation::Divergent => f.write_str("divergent"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Acceptance thresholds for [`JointDensity::validate_with`].
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    /// Mass tolerance for forms normalized in closed form.
    pub exact_mass: f64,
    pub univariate_mass: f64,
    pub grid_mass_lo: f64,
    pub grid_mass_hi: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { exact_mass: 1e-9, univariate_mass: 1e-6, grid_mass_lo: 0.99, grid_mass_hi: 1.001 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    /// Total mass, when it is well defined for the form.
    pub mass: Option<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            f.write_str("valid")?;
        } else {
            f.write_str(&self.violations.join("; "))?;
        }
        if let Some(m) = self.mass {
            write!(f, " (mass {})", crate::io::fmt_num(m))?;
        }
        Ok(())
    }
}

/// Every supported joint density model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JointDensity {
    Box(BoxDensity<f64>),
    Product(ProductDensity),
    ExpPoly(ExpPolyDensity),
    RationalSeries(RationalSeriesDensity),
    Grid(GridDensity),
}

impl From<BoxDensity<f64>> for JointDensity {
    fn from(d: BoxDensity<f64>) -> Self {
        JointDensity::Box(d)
    }
}

impl From<ProductDensity> for JointDensity {
    fn from(d: ProductDensity) -> Self {
        JointDensity::Product(d)
    }
}

impl From<ExpPolyDensity> for JointDensity {
    fn from(d: ExpPolyDensity) -> Self {
        JointDensity::ExpPoly(d)
    }
}

impl From<RationalSeriesDensity> for JointDensity {
    fn from(d: RationalSeriesDensity) -> Self {
        JointDensity::RationalSeries(d)
    }
}

impl From<GridDensity> for JointDensity {
    fn from(d: GridDensity) -> Self {
        JointDensity::Grid(d)
    }
}

impl JointDensity {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("density serializes")
    }

    pub fn kind(&self) -> &'static str {
        match self {
            JointDensity::Box(_) => "box",
            JointDensity::Product(_) => "product",
            JointDensity::ExpPoly(_) => "exp_poly",
            JointDensity::RationalSeries(_) => "rational_series",
            JointDensity::Grid(_) => "grid",
        }
    }

    /// Number of algorithms whose runtimes the density describes.
    pub fn dimension(&self) -> usize {
        match self {
            JointDensity::Product(p) => p.factors.len(),
            _ => 2,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with(&Tolerances::default())
    }

    pub fn validate_with(&self, tol: &Tolerances) -> ValidationReport {
        match self {
            JointDensity::Box(d) => ValidationReport {
                violations: d.violations(tol.exact_mass),
                mass: Some(d.mass()),
            },
            JointDensity::Product(p) => ValidationReport {
                violations: p.violations(tol.univariate_mass),
                mass: None,
            },
            JointDensity::ExpPoly(e) => ValidationReport {
                violations: e.violations(),
                mass: Some(1.0),
            },
            JointDensity::RationalSeries(r) => ValidationReport {
                violations: r.violations(tol.exact_mass),
                mass: Some(r.total_weight()),
            },
            JointDensity::Grid(g) => {
                let violations = g.violations(tol.grid_mass_lo, tol.grid_mass_hi);
                let mass = (g.values.len() == g.nx() * g.ny()).then(|| g.mass());
                ValidationReport { violations, mass }
            }
        }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidDensity(report))
        }
    }

    pub fn pdf(&self, x: f64, y: f64) -> Result<f64> {
        if !(x >= 0.0 && y >= 0.0) {
            return Err(Error::Domain(format!("pdf evaluated at ({x}, {y}) outside [0, inf)^2")));
        }
        if self.dimension() != 2 {
            return Err(Error::Contract(format!(
                "pdf(x, y) needs a two-algorithm density, this one has {}",
                self.dimension()
            )));
        }
        Ok(match self {
            JointDensity::Box(d) => d.pdf(x, y),
            JointDensity::Product(p) => p.pdf(&[x, y]),
            JointDensity::ExpPoly(e) => e.pdf(x, y),
            JointDensity::RationalSeries(r) => r.pdf(x, y),
            JointDensity::Grid(g) => g.pdf(x, y),
        })
    }

    /// `E π₁` (axis X) or `E π₂` (axis Y).
    pub fn marginal_mean(&self, axis: Axis, cfg: &QuadConfig) -> Expectation {
        match (self, axis) {
            (JointDensity::Box(d), Axis::X) => Expectation::Finite(d.mean_x()),
            (JointDensity::Box(d), Axis::Y) => Expectation::Finite(d.mean_y()),
            (JointDensity::Product(p), Axis::X) => Expectation::Finite(p.fx().mean()),
            (JointDensity::Product(p), Axis::Y) => Expectation::Finite(p.fy().mean()),
            (JointDensity::ExpPoly(e), Axis::X) => Expectation::Finite(e.mean_x()),
            (JointDensity::ExpPoly(e), Axis::Y) => Expectation::Finite(e.mean_y()),
            (JointDensity::RationalSeries(r), Axis::X) => {
                r.mean_x().map_or(Expectation::Divergent, Expectation::Finite)
            }
            (JointDensity::RationalSeries(r), Axis::Y) => Expectation::Finite(r.mean_y()),
            (JointDensity::Grid(g), _) => {
                let mean = |m: &ColumnMoments| match axis {
                    Axis::X => m.mean_x(),
                    Axis::Y => m.mean_y(),
                };
                match g.truncation_levels(GRID_DOUBLINGS) {
                    None => Expectation::Finite(mean(&g.column_moments())),
                    Some(levels) => {
                        let partials: Vec<f64> = levels.iter().map(mean).collect();
                        assess_levels(&partials, cfg, false).map(|_| partials[0])
                    }
                }
            }
        }
    }

    /// Upper end of the first algorithm's runtime support, `None` if unbounded.
    pub fn x_support_max(&self) -> Option<f64> {
        match self {
            JointDensity::Box(d) => Some(d.x_support_max()),
            JointDensity::Product(p) => p.fx().support_max(),
            JointDensity::Grid(g) => g.x_knots.last().copied(),
            JointDensity::ExpPoly(_) | JointDensity::RationalSeries(_) => None,
        }
    }

    /// `count` seeded draws of `(π₁, π₂)`.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<(f64, f64)>> {
        if self.dimension() != 2 {
            return Err(Error::Contract("sample() returns pairs; use Sampler for N > 2".into()));
        }
        let sampler = Sampler::new(self)?;
        let mut rng = sampling::rng_for(seed, 0);
        let mut buf = [0.0; 2];
        Ok((0..count)
            .map(|_| {
                sampler.draw(&mut rng, &mut buf);
                (buf[0], buf[1])
            })
            .collect())
    }
}

/// Grids are re-tabulated at `T`, `2T`, `4T` for the existence test.
pub(crate) const GRID_DOUBLINGS: u32 = 2;

//! Tabulated joint densities, constant on each grid cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Closed-form joint densities that can be tabulated onto a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridGenerator {
    /// `12 x y exp(−(x + y)²)`
    SumGaussian,
    /// `48 x y exp(−4x² − 3y²)`
    AnisotropicGaussian,
    /// Two separated peaks near (1, 7) and (7, 1).
    TwinPeaks,
    /// `exp(−x − y)`
    Exponential,
    /// `1 / ((x + 1)² (y + 1)²)`, whose marginals have no mean.
    HeavyTail,
}

/// Normalizing constant of the twin-peaks density.
pub const TWIN_PEAKS_NORMALIZER: f64 = 0.022_179_119_694_367_830_844;

impl GridGenerator {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            GridGenerator::SumGaussian => 12.0 * x * y * (-(x + y) * (x + y)).exp(),
            GridGenerator::AnisotropicGaussian => 48.0 * x * y * (-4.0 * x * x - 3.0 * y * y).exp(),
            GridGenerator::TwinPeaks => {
                let p1 = (-(x - 1.0).powi(2) - (y - 7.0).powi(2)).exp();
                let p2 = (-(x - 7.0).powi(2) - (y - 1.0).powi(2)).exp();
                TWIN_PEAKS_NORMALIZER * x * y * (p1 + p2)
            }
            GridGenerator::Exponential => (-x - y).exp(),
            GridGenerator::HeavyTail => 1.0 / ((x + 1.0).powi(2) * (y + 1.0).powi(2)),
        }
    }
}

/// Knot placement for generator grids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Uniform,
    /// Uniform in `ln(1 + t)`: fine near zero, coarse in a long tail.
    Log,
}

impl Spacing {
    /// `n` cells on `[0, t_max]`.
    pub fn knots(self, t_max: f64, n: usize) -> Vec<f64> {
        match self {
            Spacing::Uniform => uniform_knots(t_max, n),
            Spacing::Log => {
                let u = t_max.ln_1p();
                let mut k: Vec<f64> = (0..=n).map(|i| (u * i as f64 / n as f64).exp_m1()).collect();
                k[n] = t_max;
                k
            }
        }
    }

    /// Cell count on `[0, t]` that keeps the cell layout of `n` cells on `[0, t_max]`.
    fn cells_for(self, t_max: f64, n: usize, t: f64) -> usize {
        match self {
            Spacing::Uniform => (n as f64 * t / t_max).round() as usize,
            Spacing::Log => (n as f64 * t.ln_1p() / t_max.ln_1p()).round() as usize,
        }
    }
}

/// How a grid was produced, so it can be re-tabulated on a larger domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSource {
    pub generator: GridGenerator,
    pub nx: usize,
    pub ny: usize,
    pub spacing: Spacing,
}

/// Cell `(i, j)` covers `[x_i, x_{i+1}) × [y_j, y_{j+1})` with constant value
/// `values[i * ny + j]`, where `ny = y_knots.len() − 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct GridDensity {
    pub x_knots: Vec<f64>,
    pub y_knots: Vec<f64>,
    pub values: Vec<f64>,
    /// Declared truncation bound of the tabulated domain.
    pub t_max: f64,
    pub source: Option<GridSource>,
}

impl GridDensity {
    /// Tabulates `generator` at cell midpoints of a uniform `nx × ny` grid on `[0, t_max]²`.
    pub fn tabulate(generator: GridGenerator, t_max: f64, nx: usize, ny: usize) -> Self {
        Self::tabulate_with(generator, Spacing::Uniform, t_max, nx, ny)
    }

    pub fn tabulate_with(generator: GridGenerator, spacing: Spacing, t_max: f64, nx: usize, ny: usize) -> Self {
        let x_knots = spacing.knots(t_max, nx);
        let y_knots = spacing.knots(t_max, ny);
        let mut g = GridDensity::from_fn(|x, y| generator.eval(x, y), x_knots, y_knots);
        g.t_max = t_max;
        g.source = Some(GridSource { generator, nx, ny, spacing });
        g
    }

    /// Tabulates an arbitrary closed form at the cell midpoints of the given knots.
    pub fn from_fn(f: impl Fn(f64, f64) -> f64 + Sync, x_knots: Vec<f64>, y_knots: Vec<f64>) -> Self {
        let ym: Vec<f64> = y_knots.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let values: Vec<f64> = x_knots
            .par_windows(2)
            .flat_map_iter(|w| {
                let xm = 0.5 * (w[0] + w[1]);
                ym.iter().map(move |&y| (xm, y)).collect::<Vec<_>>()
            })
            .map(|(x, y)| f(x, y))
            .collect();
        let t_max = x_knots.last().copied().unwrap_or(0.0).max(y_knots.last().copied().unwrap_or(0.0));
        GridDensity { x_knots, y_knots, values, t_max, source: None }
    }

    pub fn nx(&self) -> usize {
        self.x_knots.len().saturating_sub(1)
    }

    pub fn ny(&self) -> usize {
        self.y_knots.len().saturating_sub(1)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ny() + j]
    }

    pub fn mass(&self) -> f64 {
        self.column_moments().mass()
    }

    pub fn violations(&self, mass_lo: f64, mass_hi: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (name, k) in [("x", &self.x_knots), ("y", &self.y_knots)] {
            if k.len() < 2 {
                out.push(format!("{name}-knots need at least two entries"));
            } else if k[0] != 0.0 {
                out.push(format!("{name}-knots must start at 0"));
            }
            if k.windows(2).any(|w| !(w[0] < w[1])) || k.iter().any(|v| !v.is_finite()) {
                out.push(format!("{name}-knots must be finite and strictly increasing"));
            }
        }
        if self.values.len() != self.nx() * self.ny() {
            out.push(format!(
                "expected {} cell values, found {}",
                self.nx() * self.ny(),
                self.values.len()
            ));
            return out;
        }
        if self.values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            out.push("cell values must be finite and nonnegative".into());
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            out.push(format!("truncation bound {} must be positive", self.t_max));
        }
        if out.is_empty() {
            let mass = self.mass();
            if !(mass >= mass_lo && mass <= mass_hi) {
                out.push(format!(
                    "tabulated mass {mass} outside [{mass_lo}, {mass_hi}] (deficit {})",
                    1.0 - mass
                ));
            }
        }
        out
    }

    pub fn pdf(&self, x: f64, y: f64) -> f64 {
        match (cell_of(&self.x_knots, x), cell_of(&self.y_knots, y)) {
            (Some(i), Some(j)) => self.value(i, j),
            _ => 0.0,
        }
    }

    pub fn column_moments(&self) -> ColumnMoments {
        let ny = self.ny();
        let (rate, moment) = (0..self.nx())
            .map(|i| {
                let row = &self.values[i * ny..(i + 1) * ny];
                row.iter().zip(self.y_knots.windows(2)).fold((0.0, 0.0), |(r, m), (v, w)| {
                    let dy = w[1] - w[0];
                    (r + v * dy, m + v * 0.5 * (w[1] * w[1] - w[0] * w[0]))
                })
            })
            .unzip();
        ColumnMoments { edges: self.x_knots.clone(), mass_rate: rate, y_moment_rate: moment }
    }

    /// Column moments at truncation bounds `t_max · 2^k`, `k = 0..=doublings`,
    /// keeping the cell size. `None` for grids without a generator: such a grid
    /// is its own support.
    pub fn truncation_levels(&self, doublings: u32) -> Option<Vec<ColumnMoments>> {
        let src = self.source?;
        let mut out = vec![self.column_moments()];
        for k in 1..=doublings {
            let t = self.t_max * f64::from(1u32 << k);
            let cells = |n| src.spacing.cells_for(self.t_max, n, t);
            out.push(ColumnMoments::from_generator(
                src.generator,
                &src.spacing.knots(t, cells(src.nx)),
                &src.spacing.knots(t, cells(src.ny)),
            ));
        }
        Some(out)
    }
}

pub fn uniform_knots(t_max: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
}

fn cell_of(knots: &[f64], t: f64) -> Option<usize> {
    let i = knots.partition_point(|k| *k <= t);
    (i > 0 && i < knots.len()).then(|| i - 1)
}

/// Per-column aggregates of a piecewise-constant joint density:
/// `mass_rate[i] = Σ_j v_ij (d_j − c_j)` and
/// `y_moment_rate[i] = Σ_j v_ij (d_j² − c_j²)/2`.
/// Every expectation over the grid reduces to these.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMoments {
    pub edges: Vec<f64>,
    pub mass_rate: Vec<f64>,
    pub y_moment_rate: Vec<f64>,
}

impl ColumnMoments {
    /// Midpoint tabulation of `g` on the given knots, reduced to column moments without storing cells.
    pub fn from_generator(g: GridGenerator, x_knots: &[f64], y_knots: &[f64]) -> Self {
        let edges = x_knots.to_vec();
        let (mass_rate, y_moment_rate) = edges
            .par_windows(2)
            .map(|w| {
                let xm = 0.5 * (w[0] + w[1]);
                y_knots.windows(2).fold((0.0, 0.0), |(r, m), yw| {
                    let v = g.eval(xm, 0.5 * (yw[0] + yw[1]));
                    (r + v * (yw[1] - yw[0]), m + v * 0.5 * (yw[1] * yw[1] - yw[0] * yw[0]))
                })
            })
            .unzip();
        ColumnMoments { edges, mass_rate, y_moment_rate }
    }

    fn columns(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.edges
            .windows(2)
            .zip(self.mass_rate.iter().zip(&self.y_moment_rate))
            .map(|(w, (&r, &m))| (w[0], w[1], r, m))
    }

    pub fn mass(&self) -> f64 {
        self.columns().map(|(a, b, r, _)| r * (b - a)).sum()
    }

    pub fn mean_x(&self) -> f64 {
        self.columns().map(|(a, b, r, _)| r * 0.5 * (b * b - a * a)).sum()
    }

    pub fn mean_y(&self) -> f64 {
        self.columns().map(|(a, b, _, m)| m * (b - a)).sum()
    }

    /// `P(τ < π₁)` over the tabulated domain.
    pub fn survival_x(&self, tau: f64) -> f64 {
        self.columns()
            .filter(|(_, b, _, _)| *b > tau)
            .map(|(a, b, r, _)| r * (b - a.max(tau)))
            .sum()
    }

    /// Exact expected derived time of the piecewise-constant density.
    pub fn et(&self, tau: f64) -> f64 {
        self.columns()
            .map(|(a, b, r, m)| {
                if b <= tau {
                    r * 0.5 * (b * b - a * a)
                } else if tau <= a {
                    (b - a) * (tau * r + m)
                } else {
                    r * 0.5 * (tau * tau - a * a) + (b - tau) * (tau * r + m)
                }
            })
            .sum()
    }

    /// `(∫₀^τ x f, ∫_τ y f)`: the two conditional-expectation numerators of the
    /// two-algorithm decomposition.
    pub fn split_moments(&self, tau: f64) -> (f64, f64) {
        self.columns().fold((0.0, 0.0), |(ex, ey), (a, b, r, m)| {
            let below = r * 0.5 * (b.min(tau).powi(2) - a.min(tau).powi(2)).max(0.0);
            let above = m * (b - a.max(tau)).max(0.0);
            (ex + below, ey + above)
        })
    }
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<GridGenerator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nx: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ny: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spacing: Option<Spacing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_knots: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y_knots: Option<Vec<f64>>,
    /// `values[i][j]` for x-cell `i` and y-cell `j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<Vec<f64>>>,
}

impl TryFrom<GridSpec> for GridDensity {
    type Error = String;

    fn try_from(s: GridSpec) -> Result<Self, String> {
        if let Some(generator) = s.generator {
            let t_max = s.t_max.ok_or("generator grid needs `t_max`")?;
            let nx = s.nx.unwrap_or(400);
            let ny = s.ny.unwrap_or(nx);
            if nx == 0 || ny == 0 || !(t_max > 0.0) {
                return Err("generator grid needs positive `t_max`, `nx`, `ny`".into());
            }
            return Ok(GridDensity::tabulate_with(generator, s.spacing.unwrap_or_default(), t_max, nx, ny));
        }
        let (x_knots, y_knots, rows) = match (s.x_knots, s.y_knots, s.values) {
            (Some(x), Some(y), Some(v)) => (x, y, v),
            _ => return Err("grid needs `generator` or all of `x_knots`, `y_knots`, `values`".into()),
        };
        let ny = y_knots.len().saturating_sub(1);
        if rows.iter().any(|r| r.len() != ny) {
            return Err(format!("every values row must have {ny} entries"));
        }
        let t_max = s.t_max.unwrap_or_else(|| {
            x_knots.last().copied().unwrap_or(0.0).max(y_knots.last().copied().unwrap_or(0.0))
        });
        Ok(GridDensity { x_knots, y_knots, values: rows.concat(), t_max, source: None })
    }
}

impl From<GridDensity> for GridSpec {
    fn from(g: GridDensity) -> Self {
        if let Some(src) = g.source {
            return GridSpec {
                generator: Some(src.generator),
                nx: Some(src.nx),
                ny: Some(src.ny),
                t_max: Some(g.t_max),
                spacing: (src.spacing != Spacing::Uniform).then_some(src.spacing),
                x_knots: None,
                y_knots: None,
                values: None,
            };
        }
        let ny = g.ny().max(1);
        GridSpec {
            generator: None,
            nx: None,
            ny: None,
            t_max: Some(g.t_max),
            spacing: None,
            values: Some(g.values.chunks(ny).map(|c| c.to_vec()).collect()),
            x_knots: Some(g.x_knots),
            y_knots: Some(g.y_knots),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_tabulation_and_lookup() {
        let g = GridDensity::from_fn(|x, y| x + y, vec![0.0, 1.0, 2.0], vec![0.0, 2.0]);
        assert_eq!(g.values, vec![1.5, 2.5]);
        assert_eq!(g.pdf(0.2, 1.9), 1.5);
        assert_eq!(g.pdf(1.0, 0.0), 2.5);
        assert_eq!(g.pdf(2.0, 0.0), 0.0);
    }

    #[test]
    fn log_knots() {
        let k = Spacing::Log.knots(1000.0, 3);
        assert_eq!(k[0], 0.0);
        let r = 1001f64.cbrt();
        assert!((k[1] - (r - 1.0)).abs() < 1e-9 && (k[2] - (r * r - 1.0)).abs() < 1e-9 && k[3] == 1000.0, "{k:?}");
        let g = GridDensity::tabulate_with(GridGenerator::HeavyTail, Spacing::Log, 1000.0, 400, 400);
        // truncation loses 1 - (1000/1001)^2; midpoints on ~1.7% wide log cells lose ~1e-4 more
        assert!((g.mass() - (1000.0f64 / 1001.0).powi(2)).abs() < 3e-4, "{}", g.mass());
    }

    #[test]
    fn twin_peaks_constant_normalizes() {
        let g = GridDensity::tabulate(GridGenerator::TwinPeaks, 14.0, 700, 700);
        assert!((g.mass() - 1.0).abs() < 1e-5, "{}", g.mass());
    }

    #[test]
    fn generator_levels_keep_cell_size() {
        let g = GridDensity::tabulate(GridGenerator::Exponential, 10.0, 100, 100);
        let levels = g.truncation_levels(2).unwrap();
        assert_eq!(levels[2].edges.len(), 401);
        assert!((levels[2].edges[1] - 0.1).abs() < 1e-12);
        assert!(g.clone().truncation_levels(0).unwrap().len() == 1);
        let explicit = GridDensity { source: None, ..g };
        let log = GridDensity::tabulate_with(GridGenerator::HeavyTail, Spacing::Log, 1000.0, 400, 400);
        let levels = log.truncation_levels(2).unwrap();
        assert_eq!(levels[0].edges, log.x_knots);
        assert_eq!(*levels[2].edges.last().unwrap(), 4000.0);
        assert_eq!(levels[2].edges.len(), 1 + (400.0 * 4001f64.ln() / 1001f64.ln()).round() as usize);
        assert!(explicit.truncation_levels(2).is_none());
    }
}

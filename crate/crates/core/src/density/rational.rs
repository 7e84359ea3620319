use num_traits::{Float, FromPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `2c / ((1+x)²(1+y)³) + Σ d(m,n) (m+2)(n+2) / ((1+x)^{m+3} (1+y)^{n+3})`
/// with finitely many coefficients, stored as `d[m][n]` (rows may be ragged).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalSeriesDensity<F = f64> {
    pub c: F,
    #[serde(default = "Vec::new")]
    pub d: Vec<Vec<F>>,
}

impl<F: Float + FromPrimitive> RationalSeriesDensity<F> {
    pub fn new(c: F, d: Vec<Vec<F>>) -> Self {
        RationalSeriesDensity { c, d }
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize, F)> + '_ {
        self.d
            .iter()
            .enumerate()
            .flat_map(|(m, row)| row.iter().enumerate().map(move |(n, &w)| (m, n, w)))
    }

    pub fn total_weight(&self) -> F {
        self.terms().fold(self.c, |acc, t| acc + t.2)
    }

    pub fn violations(&self, mass_tol: F) -> Vec<String> {
        let show = |v: F| v.to_f64().unwrap_or(f64::NAN);
        let mut out = Vec::new();
        if !(self.c >= F::zero() && self.c.is_finite()) {
            out.push(format!("weight c = {} must be nonnegative", show(self.c)));
        }
        for (m, n, w) in self.terms() {
            if !(w >= F::zero() && w.is_finite()) {
                out.push(format!("coefficient d({m},{n}) = {} must be nonnegative", show(w)));
            }
        }
        let total = self.total_weight();
        if (total - F::one()).abs() > mass_tol {
            out.push(format!("c + sum d(m,n) = {} differs from 1", show(total)));
        }
        out
    }

    pub fn pdf(&self, x: F, y: F) -> F {
        let (px, py) = (F::one() + x, F::one() + y);
        let two = F::one() + F::one();
        let mut v = two * self.c / (px.powi(2) * py.powi(3));
        for (m, n, w) in self.terms() {
            if w != F::zero() {
                let (m, n) = (m as i32, n as i32);
                let coef = F::from_i32((m + 2) * (n + 2)).expect("small integer");
                v = v + w * coef / (px.powi(m + 3) * py.powi(n + 3));
            }
        }
        v
    }

    /// `None` when the x-marginal has infinite mean (`c > 0`).
    pub fn mean_x(&self) -> Option<F> {
        if self.c > F::zero() {
            return None;
        }
        Some(self.terms().fold(F::zero(), |acc, (m, _, w)| acc + w / F::from_usize(m + 1).unwrap()))
    }

    pub fn mean_y(&self) -> F {
        self.terms()
            .fold(self.c, |acc, (_, n, w)| acc + w / F::from_usize(n + 1).unwrap())
    }
}

impl RationalSeriesDensity<f64> {
    /// Exact mixture draw using the Pareto-type inverse CDFs of each term.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let mut target = rng.random::<f64>() * self.total_weight();
        // tail exponents of the x- and y-survival functions
        let (mut ex, mut ey) = (1.0, 2.0);
        if target >= self.c {
            target -= self.c;
            for (m, n, w) in self.terms().filter(|t| t.2 > 0.0) {
                (ex, ey) = (m as f64 + 2.0, n as f64 + 2.0);
                if target < w {
                    break;
                }
                target -= w;
            }
        }
        let ux = 1.0 - rng.random::<f64>();
        let uy = 1.0 - rng.random::<f64>();
        (ux.powf(-1.0 / ex) - 1.0, uy.powf(-1.0 / ey) - 1.0)
    }
}

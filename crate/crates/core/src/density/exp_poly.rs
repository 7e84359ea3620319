use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// `(1 + a x + b y + c x² + d y²) / (1 + a + b + 2c + 2d) · exp(−x − y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpPolyDensity<F = f64> {
    pub a: F,
    pub b: F,
    pub c: F,
    pub d: F,
}

impl<F: Float> ExpPolyDensity<F> {
    pub fn new(a: F, b: F, c: F, d: F) -> Self {
        ExpPolyDensity { a, b, c, d }
    }

    fn two() -> F {
        F::one() + F::one()
    }

    pub fn normalizer(&self) -> F {
        F::one() + self.a + self.b + Self::two() * (self.c + self.d)
    }

    pub fn violations(&self) -> Vec<String> {
        [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)]
            .iter()
            .filter(|(_, v)| !(*v >= F::zero() && v.is_finite()))
            .map(|(n, v)| format!("coefficient {n} = {} must be nonnegative", v.to_f64().unwrap_or(f64::NAN)))
            .collect()
    }

    pub fn pdf(&self, x: F, y: F) -> F {
        let p = F::one() + self.a * x + self.b * y + self.c * x * x + self.d * y * y;
        p / self.normalizer() * (-x - y).exp()
    }

    pub fn mean_x(&self) -> F {
        let two = Self::two();
        let six = two + two + two;
        (F::one() + two * self.a + self.b + six * self.c + two * self.d) / self.normalizer()
    }

    pub fn mean_y(&self) -> F {
        ExpPolyDensity::new(self.b, self.a, self.d, self.c).mean_x()
    }
}

impl ExpPolyDensity<f64> {
    /// Exact draw: the density is a mixture of products of Gamma(1..3, 1)
    /// marginals with weights `1, a, b, 2c, 2d`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let weights = [1.0, self.a, self.b, 2.0 * self.c, 2.0 * self.d];
        let shapes = [(1, 1), (2, 1), (1, 2), (3, 1), (1, 3)];
        let mut target = rng.random::<f64>() * self.normalizer();
        let mut pick = 0;
        for (i, w) in weights.iter().enumerate() {
            if *w > 0.0 {
                pick = i;
                if target < *w {
                    break;
                }
                target -= w;
            }
        }
        let (sx, sy) = shapes[pick];
        (gamma_int(rng, sx), gamma_int(rng, sy))
    }
}

/// Gamma(shape, 1) for small integer shape, as a sum of unit exponentials.
fn gamma_int<R: Rng + ?Sized>(rng: &mut R, shape: u32) -> f64 {
    (0..shape).map(|_| -(1.0 - rng.random::<f64>()).ln()).sum()
}

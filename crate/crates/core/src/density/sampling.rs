use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{JointDensity, UnivariateDensity};
use crate::error::Result;

/// Deterministic generator for `seed`, on an independent substream per shard.
pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A density prepared for repeated draws (mass tables built once).
#[derive(Debug)]
pub struct Sampler<'a> {
    density: &'a JointDensity,
    cumulative: Vec<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(density: &'a JointDensity) -> Result<Self> {
        density.ensure_valid()?;
        let cumulative = match density {
            JointDensity::Box(d) => running_sum(d.boxes.iter().map(|b| b.mass())),
            JointDensity::Grid(g) => {
                let ny = g.ny();
                running_sum(g.values.iter().enumerate().map(|(idx, v)| {
                    let (i, j) = (idx / ny, idx % ny);
                    v * (g.x_knots[i + 1] - g.x_knots[i]) * (g.y_knots[j + 1] - g.y_knots[j])
                }))
            }
            _ => Vec::new(),
        };
        Ok(Sampler { density, cumulative })
    }

    pub fn dimension(&self) -> usize {
        self.density.dimension()
    }

    /// Writes one draw of `(π₁, …, π_N)` into `out`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self.density {
            JointDensity::Box(d) => {
                let b = &d.boxes[self.pick(rng)];
                out[0] = b.a + (b.b - b.a) * rng.random::<f64>();
                out[1] = b.c + (b.d - b.c) * rng.random::<f64>();
            }
            JointDensity::Grid(g) => {
                let idx = self.pick(rng);
                let (i, j) = (idx / g.ny(), idx % g.ny());
                out[0] = lerp(g.x_knots[i], g.x_knots[i + 1], rng.random());
                out[1] = lerp(g.y_knots[j], g.y_knots[j + 1], rng.random());
            }
            JointDensity::Product(p) => {
                for (slot, f) in out.iter_mut().zip(&p.factors) {
                    *slot = UnivariateDensity::sample(f, rng);
                }
            }
            JointDensity::ExpPoly(e) => (out[0], out[1]) = e.sample(rng),
            JointDensity::RationalSeries(r) => (out[0], out[1]) = r.sample(rng),
        }
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let target = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|c| *c <= target)
            .min(self.cumulative.len() - 1)
    }
}

fn running_sum(it: impl Iterator<Item = f64>) -> Vec<f64> {
    it.scan(0.0, |acc, m| {
        *acc += m;
        Some(*acc)
    })
    .collect()
}

fn lerp(lo: f64, hi: f64, u: f64) -> f64 {
    lo + (hi - lo) * u
}

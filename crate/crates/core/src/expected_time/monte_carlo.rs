use rayon::prelude::*;

use super::{EtMethod, EtResult};
use crate::density::{JointDensity, Sampler};
use crate::error::{Error, Result};
use crate::schedule::{completion, Schedule};

#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    /// Independent substreams; results are bit-identical for a fixed
    /// `(seed, shards)` pair whatever the thread count.
    pub shards: usize,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        McConfig { samples, seed, shards: 8 }
    }
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }
}

/// Averages the derived time over seeded draws of all runtimes.
pub fn et_monte_carlo(density: &JointDensity, schedule: &Schedule, cfg: &McConfig) -> Result<EtResult> {
    if density.dimension() != schedule.portfolio_size() {
        return Err(Error::Contract(format!(
            "schedule drives {} algorithms but the density describes {}",
            schedule.portfolio_size(),
            density.dimension()
        )));
    }
    if cfg.samples == 0 || cfg.shards == 0 {
        return Err(Error::Contract("Monte Carlo needs a positive sample and shard count".into()));
    }
    let sampler = Sampler::new(density)?;
    let taus = schedule.budgets();
    let per = cfg.samples / cfg.shards;
    let extra = cfg.samples % cfg.shards;
    let shards: Vec<Moments> = (0..cfg.shards)
        .into_par_iter()
        .map(|s| {
            let count = per + usize::from(s < extra);
            let mut rng = crate::density::rng_for(cfg.seed, s as u64);
            let mut buf = vec![0.0; sampler.dimension()];
            let mut m = Moments::default();
            for _ in 0..count {
                sampler.draw(&mut rng, &mut buf);
                m.push(completion(&buf, taus).0);
            }
            m
        })
        .collect();
    let total = shards.into_iter().fold(Moments::default(), Moments::merge);
    let var = if total.n > 1.0 { total.m2 / (total.n - 1.0) } else { 0.0 };
    Ok(EtResult {
        value: crate::density::Expectation::Finite(total.mean),
        method: EtMethod::MonteCarlo,
        stderr: Some((var / total.n).sqrt()),
    })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};

use crate::jump_relax::gumbel_from_uniform;

/// Pre-drawn randomness for `paths x steps`, held fixed for a whole
/// training run so that every epoch sees the same scenarios.
///
/// Each path owns an independent ChaCha stream, so the first `M` paths of a
/// larger bank are bitwise the paths of a bank with `M` paths.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBank {
    paths: usize,
    steps: usize,
    categories: usize,
    seed: u64,
    eps_s: Vec<f64>,
    eps_w: Vec<f64>,
    u_s: Vec<f64>,
    u_v: Vec<f64>,
    gumbel: Vec<f64>,
}

/// Randomness consumed by one Euler step of one path.
#[derive(Debug, Clone, Copy)]
pub struct StepNoise<'a> {
    /// Normal driving the asset.
    pub eps_s: f64,
    /// Independent normal mixed into the variance driver.
    pub eps_w: f64,
    pub u_s: f64,
    pub u_v: f64,
    pub gumbel: &'a [f64],
}

impl NoiseBank {
    pub fn generate(paths: usize, steps: usize, categories: usize, seed: u64) -> Self {
        let n = paths * steps;
        let mut bank = Self {
            paths,
            steps,
            categories,
            seed,
            eps_s: Vec::with_capacity(n),
            eps_w: Vec::with_capacity(n),
            u_s: Vec::with_capacity(n),
            u_v: Vec::with_capacity(n),
            gumbel: Vec::with_capacity(n * categories),
        };
        for p in 0..paths {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            for _ in 0..steps {
                bank.eps_s.push(rng.sample(StandardNormal));
                bank.eps_w.push(rng.sample(StandardNormal));
                bank.u_s.push(rng.sample(Open01));
                bank.u_v.push(rng.sample(Open01));
                for _ in 0..categories {
                    bank.gumbel.push(gumbel_from_uniform(rng.sample(Open01)));
                }
            }
        }
        bank
    }

    pub fn paths(&self) -> usize {
        self.paths
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn at(&self, path: usize, step: usize) -> StepNoise<'_> {
        let i = path * self.steps + step;
        StepNoise {
            eps_s: self.eps_s[i],
            eps_w: self.eps_w[i],
            u_s: self.u_s[i],
            u_v: self.u_v[i],
            gumbel: &self.gumbel[i * self.categories..(i + 1) * self.categories],
        }
    }
}

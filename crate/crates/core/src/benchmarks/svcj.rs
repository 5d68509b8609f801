use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::black_scholes::check_contract;
use super::heston::HestonParams;
use super::BenchError;

/// Heston dynamics plus simultaneous jumps: at rate `lambda` the variance
/// jumps by `Zv ~ Exp(mean mu_v)` and the log-price by
/// `Zy | Zv ~ N(mu_y + rho_j Zv, sigma_y^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvcjParams {
    #[serde(flatten)]
    pub heston: HestonParams,
    pub lambda: f64,
    pub mu_v: f64,
    pub mu_y: f64,
    pub sigma_y: f64,
    pub rho_j: f64,
}

impl SvcjParams {
    /// Parameters of the synthetic jump study, on top of the Heston baseline.
    pub fn baseline() -> Self {
        Self {
            heston: HestonParams::baseline(),
            lambda: 0.1,
            mu_v: 0.6,
            mu_y: 0.08,
            sigma_y: 2.15,
            rho_j: 0.57,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        self.heston.validate()?;
        let ok = self.lambda.is_finite()
            && self.lambda >= 0.0
            && self.mu_v.is_finite()
            && self.mu_v > 0.0
            && self.sigma_y.is_finite()
            && self.sigma_y > 0.0
            && self.mu_y.is_finite()
            && self.rho_j.is_finite()
            && self.rho_j * self.mu_v < 1.0;
        if ok {
            Ok(())
        } else {
            Err(BenchError::BadInput(format!("invalid SVCJ parameters {self:?}")))
        }
    }

    /// `E[e^{Zy}] - 1`, the mean relative price jump.
    pub fn mean_jump(&self) -> f64 {
        (self.mu_y + 0.5 * self.sigma_y * self.sigma_y).exp() / (1.0 - self.rho_j * self.mu_v) - 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct McSettings {
    pub paths: usize,
    pub steps_per_year: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            paths: 100_000,
            steps_per_year: 252,
            seed: 0,
            antithetic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPrice {
    pub price: f64,
    pub std_error: f64,
}

const CHUNK: usize = 2048;

/// Risk-neutral SVCJ call.
pub fn svcj_call(
    spot: f64,
    strike: f64,
    rate: f64,
    maturity: f64,
    p: &SvcjParams,
    mc: &McSettings,
) -> Result<McPrice, BenchError> {
    Ok(svcj_surface(spot, rate, rate, &[(maturity, strike)], p, mc)?[0])
}

/// Prices every `(maturity, strike)` from one set of paths, so strikes and
/// maturities share random numbers. The asset drifts at `drift`, payoffs
/// are discounted at `rate`.
///
/// Log-Euler with full truncation on a grid of `steps_per_year` plus the
/// maturities themselves; the drift is compensated for the mean jump.
pub fn svcj_surface(
    spot: f64,
    rate: f64,
    drift: f64,
    contracts: &[(f64, f64)],
    p: &SvcjParams,
    mc: &McSettings,
) -> Result<Vec<McPrice>, BenchError> {
    p.validate()?;
    for &(t, k) in contracts {
        check_contract(spot, k, rate, t)?;
    }
    if contracts.is_empty() || mc.paths < 2 || mc.steps_per_year == 0 || !drift.is_finite() {
        return Err(BenchError::BadInput(
            "need contracts, at least two paths and a positive step rate".into(),
        ));
    }

    let (times, at) = time_grid(contracts, mc.steps_per_year);
    // contracts grouped by the grid index of their maturity
    let mut due: Vec<Vec<usize>> = vec![Vec::new(); times.len()];
    for (c, &j) in at.iter().enumerate() {
        due[j].push(c);
    }
    let disc: Vec<f64> = contracts.iter().map(|&(t, _)| (-rate * t).exp()).collect();
    let n = contracts.len();
    let samples = if mc.antithetic { mc.paths / 2 } else { mc.paths };
    let chunks = samples.div_ceil(CHUNK);
    let sim = Sim {
        p,
        spot,
        drift,
        times: &times,
        due: &due,
        contracts,
        disc: &disc,
    };

    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut sum = vec![0.0; n];
            let mut sq = vec![0.0; n];
            let mut pay = vec![0.0; n];
            let mut pay2 = vec![0.0; n];
            for _ in 0..count {
                if mc.antithetic {
                    sim.pair(&mut rng, &mut pay, &mut pay2);
                    for i in 0..n {
                        pay[i] = 0.5 * (pay[i] + pay2[i]);
                    }
                } else {
                    sim.path(&mut rng, &mut pay);
                }
                for i in 0..n {
                    sum[i] += pay[i];
                    sq[i] += pay[i] * pay[i];
                }
            }
            (sum, sq)
        })
        .collect();

    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for (s, q) in &parts {
        for i in 0..n {
            sum[i] += s[i];
            sq[i] += q[i];
        }
    }
    let m = samples as f64;
    Ok((0..n)
        .map(|i| {
            let mean = sum[i] / m;
            let var = ((sq[i] - m * mean * mean) / (m - 1.0)).max(0.0);
            McPrice {
                price: mean,
                std_error: (var / m).sqrt(),
            }
        })
        .collect())
}

/// Uniform steps of `1/steps_per_year` with every maturity inserted, and
/// for each contract the index of its maturity on that grid.
fn time_grid(contracts: &[(f64, f64)], steps_per_year: usize) -> (Vec<f64>, Vec<usize>) {
    let h = 1.0 / steps_per_year as f64;
    let tmax = contracts.iter().map(|c| c.0).fold(0.0, f64::max);
    let mut times: Vec<f64> = (0..).map(|k| k as f64 * h).take_while(|t| *t < tmax - 1e-10).collect();
    for &(t, _) in contracts {
        times.push(t);
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    let at = contracts
        .iter()
        .map(|&(t, _)| times.iter().position(|s| (s - t).abs() < 1e-10).unwrap())
        .collect();
    (times, at)
}

struct Sim<'a> {
    p: &'a SvcjParams,
    spot: f64,
    drift: f64,
    times: &'a [f64],
    due: &'a [Vec<usize>],
    contracts: &'a [(f64, f64)],
    disc: &'a [f64],
}

impl Sim<'_> {
    fn path(&self, rng: &mut ChaCha8Rng, pay: &mut [f64]) {
        self.run(rng, &mut [pay]);
    }

    /// Two paths with mirrored diffusion shocks and shared jumps.
    fn pair(&self, rng: &mut ChaCha8Rng, a: &mut [f64], b: &mut [f64]) {
        self.run(rng, &mut [a, b]);
    }

    fn run(&self, rng: &mut ChaCha8Rng, out: &mut [&mut [f64]]) {
        let h = &self.p.heston;
        let comp = self.p.lambda * self.p.mean_jump();
        let root = (1.0 - h.rho * h.rho).sqrt();
        let mut x = [self.spot.ln(); 2];
        let mut v = [h.v0; 2];
        let k = out.len();
        for j in 1..self.times.len() {
            let dt = self.times[j] - self.times[j - 1];
            let sq = dt.sqrt();
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let (jy, jv) = self.jumps(rng, dt);
            for a in 0..k {
                let sign = if a == 0 { 1.0 } else { -1.0 };
                let vp = v[a].max(0.0);
                let sv = vp.sqrt();
                x[a] += (self.drift - comp - 0.5 * vp) * dt + sv * sq * sign * z1 + jy;
                v[a] += h.kappa * (h.theta - vp) * dt + h.sigma_v * sv * sq * sign * (h.rho * z1 + root * z2) + jv;
            }
            for &c in &self.due[j] {
                let strike = self.contracts[c].1;
                for a in 0..k {
                    out[a][c] = self.disc[c] * (x[a].exp() - strike).max(0.0);
                }
            }
        }
    }

    fn jumps(&self, rng: &mut ChaCha8Rng, dt: f64) -> (f64, f64) {
        if self.p.lambda == 0.0 {
            return (0.0, 0.0);
        }
        // inverse-transform Poisson count
        let l = self.p.lambda * dt;
        let u: f64 = rng.sample(Open01);
        let mut term = (-l).exp();
        let mut cdf = term;
        let mut count = 0;
        while u > cdf && count < 50 {
            count += 1;
            term *= l / count as f64;
            cdf += term;
        }
        let (mut jy, mut jv) = (0.0, 0.0);
        for _ in 0..count {
            let e: f64 = rng.sample(Open01);
            let zv = -self.p.mu_v * e.ln();
            let z: f64 = rng.sample(StandardNormal);
            jv += zv;
            jy += self.p.mu_y + self.p.rho_j * zv + self.p.sigma_y * z;
        }
        (jy, jv)
    }
}

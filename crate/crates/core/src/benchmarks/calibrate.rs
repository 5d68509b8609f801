use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::black_scholes::{bs_call, BsParams};
use super::heston::{heston_call, HestonParams};
use super::svcj::{svcj_surface, McSettings, SvcjParams};
use super::BenchError;
use crate::market_data::OptionQuote;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Stop once the simplex is this small in every coordinate...
    pub xtol: f64,
    /// ...and its objective values agree to this absolute spread.
    pub ftol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evals: 4000,
            xtol: 1e-10,
            ftol: 1e-14,
            initial_step: 0.3,
        }
    }
}

/// Minimum found, its value and the number of evaluations used.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

impl NelderMead {
    /// Downhill simplex. Non-finite objective values count as `+inf`.
    pub fn minimize(&self, mut f: impl FnMut(&[f64]) -> f64, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };
        let mut evals = 0;
        let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            simplex.push(x);
        }
        let mut fs: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

        while evals < self.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            fs = order.iter().map(|&i| fs[i]).collect();

            let size = simplex[1..]
                .iter()
                .flat_map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if size < self.xtol && (fs[n] - fs[0]) <= self.ftol {
                break;
            }

            let centroid: Vec<f64> = (0..n)
                .map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / n as f64)
                .collect();
            let toward = |t: f64| -> Vec<f64> {
                (0..n)
                    .map(|j| centroid[j] + t * (simplex[n][j] - centroid[j]))
                    .collect()
            };

            let xr = toward(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < fs[0] {
                let xe = toward(-2.0);
                let fe = eval(&xe, &mut evals);
                if fe < fr {
                    simplex[n] = xe;
                    fs[n] = fe;
                } else {
                    simplex[n] = xr;
                    fs[n] = fr;
                }
                continue;
            }
            if fr < fs[n - 1] {
                simplex[n] = xr;
                fs[n] = fr;
                continue;
            }
            let (xc, fc) = if fr < fs[n] {
                let xc = toward(-0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = toward(0.5);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < fs[n].min(fr) {
                simplex[n] = xc;
                fs[n] = fc;
                continue;
            }
            // shrink toward the best vertex
            let best = simplex[0].clone();
            for i in 1..=n {
                for (x, b) in simplex[i].iter_mut().zip(&best) {
                    *x = b + 0.5 * (*x - b);
                }
                fs[i] = eval(&simplex[i], &mut evals);
            }
        }
        let best = (0..=n).min_by(|&a, &b| fs[a].total_cmp(&fs[b])).unwrap();
        Minimum {
            x: simplex[best].clone(),
            f: fs[best],
            evals,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParametricKind {
    Bs,
    Heston,
    Svcj,
}

/// A calibrated parametric pricer. Calibration and pricing are under the
/// pricing measure, so the asset drifts at each quote's rate; `mu` of the
/// Heston parameters records that rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ParametricModel {
    Bs(BsParams),
    Heston(HestonParams),
    Svcj { params: SvcjParams, mc: McSettings },
}

impl ParametricModel {
    pub fn kind(&self) -> ParametricKind {
        match self {
            ParametricModel::Bs(_) => ParametricKind::Bs,
            ParametricModel::Heston(_) => ParametricKind::Heston,
            ParametricModel::Svcj { .. } => ParametricKind::Svcj,
        }
    }

    pub fn prices(&self, quotes: &[OptionQuote]) -> Result<Vec<f64>, BenchError> {
        match self {
            ParametricModel::Bs(p) => quotes
                .iter()
                .map(|q| bs_call(q.spot, q.strike, q.rate, q.maturity, p.sigma))
                .collect(),
            ParametricModel::Heston(p) => quotes
                .iter()
                .map(|q| heston_call(q.spot, q.strike, q.rate, q.maturity, p))
                .collect(),
            ParametricModel::Svcj { params, mc } => {
                // one simulation per (spot, rate) group
                let mut out = vec![0.0; quotes.len()];
                let mut done = vec![false; quotes.len()];
                for i in 0..quotes.len() {
                    if done[i] {
                        continue;
                    }
                    let (s, r) = (quotes[i].spot, quotes[i].rate);
                    let members: Vec<usize> = (i..quotes.len())
                        .filter(|&j| quotes[j].spot == s && quotes[j].rate == r)
                        .collect();
                    let contracts: Vec<(f64, f64)> = members
                        .iter()
                        .map(|&j| (quotes[j].maturity, quotes[j].strike))
                        .collect();
                    let res = svcj_surface(s, r, r, &contracts, params, mc)?;
                    for (&j, p) in members.iter().zip(res) {
                        out[j] = p.price;
                        done[j] = true;
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibrated {
    #[serde(flatten)]
    pub model: ParametricModel,
    /// Sum of squared pricing errors at the returned parameters.
    pub objective: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    pub restarts: usize,
    pub seed: u64,
    pub simplex: NelderMead,
    /// Fixed-seed simulation behind the SVCJ objective.
    pub svcj_mc: McSettings,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            seed: 0,
            simplex: NelderMead::default(),
            svcj_mc: McSettings {
                paths: 4000,
                ..McSettings::default()
            },
        }
    }
}

/// Calibrated correlations stay inside `(-RHO_BOUND, RHO_BOUND)`.
const RHO_BOUND: f64 = 0.99;

fn decode(kind: ParametricKind, x: &[f64], rate: f64, mc: &McSettings) -> ParametricModel {
    let heston = |x: &[f64]| HestonParams {
        mu: rate,
        kappa: x[0].exp(),
        theta: x[1].exp(),
        sigma_v: x[2].exp(),
        rho: RHO_BOUND * x[3].tanh(),
        v0: x[4].exp(),
    };
    match kind {
        ParametricKind::Bs => ParametricModel::Bs(BsParams { sigma: x[0].exp() }),
        ParametricKind::Heston => ParametricModel::Heston(heston(x)),
        ParametricKind::Svcj => ParametricModel::Svcj {
            params: SvcjParams {
                heston: heston(x),
                lambda: x[5].exp(),
                mu_v: x[6].exp(),
                mu_y: x[7],
                sigma_y: x[8].exp(),
                rho_j: x[9],
            },
            mc: *mc,
        },
    }
}

fn start(kind: ParametricKind) -> Vec<f64> {
    let heston = [
        1.0f64.ln(),
        0.05f64.ln(),
        0.5f64.ln(),
        (-0.5f64 / RHO_BOUND).atanh(),
        0.05f64.ln(),
    ];
    match kind {
        ParametricKind::Bs => vec![0.2f64.ln()],
        ParametricKind::Heston => heston.to_vec(),
        ParametricKind::Svcj => {
            let mut x = heston.to_vec();
            x.extend([0.1f64.ln(), 0.1f64.ln(), 0.0, 0.1f64.ln(), 0.0]);
            x
        }
    }
}

/// Least-squares fit by Nelder-Mead in an unconstrained parameterization
/// (logs for positive parameters, `atanh` for the correlation). The first
/// start is a fixed generic guess, the others are seeded perturbations of
/// it; the best of all runs is kept.
pub fn calibrate_parametric(
    kind: ParametricKind,
    quotes: &[OptionQuote],
    opts: &CalibrationOptions,
) -> Result<Calibrated, BenchError> {
    if quotes.is_empty() {
        return Err(BenchError::BadInput("no quotes to calibrate to".into()));
    }
    let rate = quotes.iter().map(|q| q.rate).sum::<f64>() / quotes.len() as f64;
    let objective = |x: &[f64]| -> f64 {
        match decode(kind, x, rate, &opts.svcj_mc).prices(quotes) {
            Ok(p) => p.iter().zip(quotes).map(|(p, q)| (p - q.price).powi(2)).sum(),
            Err(_) => f64::INFINITY,
        }
    };

    let x0 = start(kind);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..opts.restarts.max(1))
        .map(|r| {
            x0.iter()
                .map(|&v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if r == 0 {
                        v
                    } else {
                        v + 0.5 * z
                    }
                })
                .collect()
        })
        .collect();

    let runs: Vec<Minimum> = starts
        .par_iter()
        .map(|s| {
            // a second pass from the first optimum recovers from collapsed simplices
            let first = opts.simplex.minimize(objective, s);
            let second = opts.simplex.minimize(objective, &first.x);
            Minimum {
                evals: first.evals + second.evals,
                ..if second.f <= first.f { second } else { first }
            }
        })
        .collect();
    let evaluations = runs.iter().map(|m| m.evals).sum();
    let best = runs.into_iter().min_by(|a, b| a.f.total_cmp(&b.f)).unwrap();
    if !best.f.is_finite() {
        return Err(BenchError::CalibrationFailed(format!(
            "{kind:?}: no finite objective value found"
        )));
    }
    Ok(Calibrated {
        model: decode(kind, &best.x, rate, &opts.svcj_mc),
        objective: best.f,
        evaluations,
    })
}

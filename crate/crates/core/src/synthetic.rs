//! Option grids priced by a known generator, for controlled experiments.
//!
//! Prices are produced under the generator's own drift `mu` and discounted
//! at the grid rate. Heston quotes are exact; SVCJ quotes are Monte-Carlo
//! estimates that carry their standard error.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmarks::{heston_call_under_drift, svcj_surface, BenchError, HestonParams, McSettings, SvcjParams};
use crate::market_data::{OptionQuote, DAYS_PER_YEAR};

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Pricer(#[from] BenchError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Generator {
    Heston(HestonParams),
    Svcj {
        params: SvcjParams,
        /// Simulation settings; the seed is supplied at generation time.
        mc: McSettings,
    },
}

impl Generator {
    pub fn name(&self) -> &'static str {
        match self {
            Generator::Heston(_) => "heston",
            Generator::Svcj { .. } => "svcj",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub maturities: Vec<f64>,
    pub strikes: Vec<f64>,
    pub spot: f64,
    pub rate: f64,
    pub generator: Generator,
}

/// Date stamped on every synthetic quote.
pub fn synthetic_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 1, 2).unwrap()
}

fn months(m: &[u32]) -> Vec<f64> {
    m.iter().map(|&k| k as f64 / 12.0).collect()
}

fn strikes(from: u32, to: u32, step: u32) -> Vec<f64> {
    (from..=to).step_by(step as usize).map(f64::from).collect()
}

const SPOT: f64 = 100.0;
const RATE: f64 = 0.025;

pub fn heston_training_grid() -> GridSpec {
    GridSpec {
        maturities: months(&[1, 2, 3, 6, 12]),
        strikes: strikes(60, 140, 10),
        spot: SPOT,
        rate: RATE,
        generator: Generator::Heston(HestonParams::baseline()),
    }
}

pub fn heston_testing_grid() -> GridSpec {
    GridSpec {
        maturities: months(&[1, 2, 3, 4, 5, 6, 8, 9, 10, 12]),
        strikes: strikes(60, 140, 5),
        ..heston_training_grid()
    }
}

/// Training and testing grids with the SVCJ generator; the simulation uses
/// a million paths.
pub fn svcj_grids() -> (GridSpec, GridSpec) {
    let generator = Generator::Svcj {
        params: SvcjParams::baseline(),
        mc: McSettings {
            paths: 1_000_000,
            ..McSettings::default()
        },
    };
    (
        GridSpec {
            generator: generator.clone(),
            ..heston_training_grid()
        },
        GridSpec {
            generator,
            ..heston_testing_grid()
        },
    )
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.maturities.is_empty() || self.strikes.is_empty() {
            return Err(SyntheticError::BadGrid("empty maturity or strike list".into()));
        }
        let positive = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x > 0.0);
        if !positive(&self.maturities) || !positive(&self.strikes) || !(self.spot > 0.0) || !self.rate.is_finite() {
            return Err(SyntheticError::BadGrid("non-positive maturity, strike or spot".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&self.maturities) || !increasing(&self.strikes) {
            return Err(SyntheticError::BadGrid(
                "maturities and strikes must be strictly increasing".into(),
            ));
        }
        Ok(())
    }

    /// `(maturity, strike)` pairs, maturity-major then by strike.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.maturities
            .iter()
            .flat_map(|&t| self.strikes.iter().map(move |&k| (t, k)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.maturities.len() * self.strikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Prices every grid point. Quotes have bid = ask = price and unit
/// activity so the liquidity screens keep them.
///
/// For SVCJ all points come from one set of paths drawn from `seed`. The
/// path grid is fixed by the step rate, so two grids generated with the
/// same seed agree exactly on the points they share.
pub fn generate_prices(grid: &GridSpec, seed: u64) -> Result<Vec<OptionQuote>, SyntheticError> {
    grid.validate()?;
    let points = grid.points();
    let priced: Vec<(f64, Option<f64>)> = match &grid.generator {
        Generator::Heston(p) => points
            .iter()
            .map(|&(t, k)| Ok((heston_call_under_drift(grid.spot, k, grid.rate, t, p)?, None)))
            .collect::<Result<_, BenchError>>()?,
        Generator::Svcj { params, mc } => {
            let mc = McSettings { seed, ..*mc };
            svcj_surface(grid.spot, grid.rate, params.heston.mu, &points, params, &mc)?
                .into_iter()
                .map(|r| (r.price, Some(r.std_error)))
                .collect()
        }
    };
    Ok(points
        .iter()
        .zip(priced)
        .map(|(&(t, k), (price, se))| {
            let mut q = OptionQuote::new(synthetic_date(), grid.spot, k, t * DAYS_PER_YEAR, grid.rate, price);
            q.std_error = se;
            q
        })
        .collect())
}

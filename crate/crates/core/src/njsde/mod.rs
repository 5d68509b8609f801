//! Neural jump-diffusion: Euler recursion with network coefficients,
//! Monte-Carlo call pricing, squared-error calibration loss with an exact
//! pathwise gradient, and the training loop.
//!
//! The eight coefficient heads drive
//!
//! ```text
//! S' = S + a1 dt + a2 sqrt(dt) eS + a3 uS f
//! V' = V + a4 dt + a5 sqrt(dt) eV + a6 uV f
//! eV = a8 eS + sqrt(1 - a8^2) w
//! ```
//!
//! where `f` is the relaxed jump count whose intensity is `a7 dt`.

mod engine;
mod noise;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jump_relax::{RelaxConfig, RelaxError};
use crate::market_data::OptionQuote;
use crate::optim::AdamConfig;
use crate::tensor_net::{ArchConfig, NetError};

pub use engine::{
    disable_jumps, grad_loss, loss, price_and_gradient, price_call, price_call_at, simulate_path, step, PriceResult,
    StepContext, StepTape,
};
pub use noise::{NoiseBank, StepNoise};
pub use train::{train, EpochRecord, TrainState, TRAIN_STATE_FORMAT};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error("{what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("time step must be positive, got {0}")]
    NegativeDt(f64),
    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("no calibration targets")]
    EmptyTargets,
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A European call to be priced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractSpec {
    pub strike: f64,
    pub maturity: f64,
    pub rate: f64,
    pub spot: f64,
}

impl ContractSpec {
    pub fn new(strike: f64, maturity: f64, rate: f64, spot: f64) -> Self {
        Self {
            strike,
            maturity,
            rate,
            spot,
        }
    }

    pub fn from_quote(q: &OptionQuote) -> Self {
        Self::new(q.strike, q.maturity, q.rate, q.spot)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let ok = [self.strike, self.maturity, self.spot]
            .iter()
            .all(|x| x.is_finite() && *x > 0.0)
            && self.rate.is_finite();
        if ok {
            Ok(())
        } else {
            Err(EngineError::BadConfig(format!("invalid contract {self:?}")))
        }
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }
}

/// A contract with its observed price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub contract: ContractSpec,
    pub price: f64,
}

impl Target {
    pub fn from_quote(q: &OptionQuote) -> Self {
        Self {
            contract: ContractSpec::from_quote(q),
            price: q.price,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub s: f64,
    pub v: f64,
    pub step: usize,
}

impl PathState {
    pub fn start(spot: f64, v0: f64) -> Self {
        Self {
            s: spot,
            v: v0,
            step: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Full jump-diffusion.
    Njsde,
    /// Two-factor diffusion, the jump code is never run.
    Nsde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeFeature {
    Remaining,
    Elapsed,
}

/// What the coefficient networks see.
///
/// The base vector is `(S/S0, K/S0, time, r)`; with `variance` set the
/// truncated variance `max(V, 0)` is appended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub time: TimeFeature,
    pub variance: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            time: TimeFeature::Remaining,
            variance: false,
        }
    }
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        if self.variance {
            5
        } else {
            4
        }
    }

    pub fn fill(&self, s: f64, v: f64, elapsed: f64, c: &ContractSpec, out: &mut Vec<f64>) {
        out.clear();
        out.push(s / c.spot);
        out.push(c.strike / c.spot);
        out.push(match self.time {
            TimeFeature::Remaining => c.maturity - elapsed,
            TimeFeature::Elapsed => elapsed,
        });
        out.push(c.rate);
        if self.variance {
            out.push(v.max(0.0));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub paths: usize,
    pub steps: usize,
    pub epochs: usize,
    pub model: ModelKind,
    pub bank_seed: u64,
    pub v0: f64,
    pub features: FeatureConfig,
    pub arch: ArchConfig,
    pub relax: RelaxConfig,
    pub optimizer: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            paths: 1000,
            steps: 50,
            epochs: 2000,
            model: ModelKind::Njsde,
            bank_seed: 0,
            v0: 0.04,
            features: FeatureConfig::default(),
            arch: ArchConfig::default(),
            relax: RelaxConfig::default(),
            optimizer: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.paths == 0 || self.steps == 0 {
            return Err(EngineError::BadConfig("paths and steps must be at least 1".into()));
        }
        if !self.v0.is_finite() {
            return Err(EngineError::BadConfig("v0 must be finite".into()));
        }
        let o = &self.optimizer;
        if !(o.learning_rate > 0.0) || !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) {
            return Err(EngineError::BadConfig("optimizer settings out of range".into()));
        }
        self.relax.validate()?;
        Ok(())
    }

    pub fn bank(&self) -> NoiseBank {
        NoiseBank::generate(self.paths, self.steps, self.relax.categories(), self.bank_seed)
    }
}

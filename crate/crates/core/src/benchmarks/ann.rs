use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::market_data::OptionQuote;
use crate::optim::{AdamConfig, AdamState};
use crate::tensor_net::{inverse_softplus, Activation, NetSpec, Network, Tape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnConfig {
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub epochs: usize,
    pub optimizer: AdamConfig,
}

impl Default for AnnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            hidden_activation: Activation::Tanh,
            epochs: 2000,
            optimizer: AdamConfig::default(),
        }
    }
}

/// Direct regression from contract terms to price. The network sees
/// `(1, K/S0, T, r)` and its SoftPlus output is a price in units of spot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    pub net: Network,
    /// In-sample sum of squared errors before each update.
    pub history: Vec<f64>,
}

fn features(strike: f64, maturity: f64, rate: f64, spot: f64) -> [f64; 4] {
    [1.0, strike / spot, maturity, rate]
}

impl AnnModel {
    /// Starts near the flat price `level` (in units of spot), with damped
    /// output weights.
    pub fn init(cfg: &AnnConfig, seed: u64, level: f64) -> Result<Self, BenchError> {
        let mut layer_sizes = vec![4];
        layer_sizes.extend_from_slice(&cfg.hidden);
        layer_sizes.push(1);
        let spec = NetSpec {
            layer_sizes,
            hidden_activation: cfg.hidden_activation,
            output_activation: Activation::SoftPlus,
            output_bias: inverse_softplus(level.max(1e-6)),
        };
        let mut net = Network::init(spec, seed)?;
        let fan_in = net.spec().layer_sizes[net.spec().layer_sizes.len() - 2];
        let n = net.params().len();
        for w in &mut net.params_mut()[n - 1 - fan_in..n - 1] {
            *w *= 0.1;
        }
        Ok(Self {
            net,
            history: Vec::new(),
        })
    }

    pub fn price(&self, spot: f64, strike: f64, maturity: f64, rate: f64) -> Result<f64, BenchError> {
        let mut tape = Tape::new();
        Ok(spot * self.net.forward(&features(strike, maturity, rate, spot), &mut tape)?)
    }

    pub fn price_quote(&self, q: &OptionQuote) -> Result<f64, BenchError> {
        self.price(q.spot, q.strike, q.maturity, q.rate)
    }

    /// Sum of squared errors and its gradient over `quotes`.
    pub fn loss_and_gradient(&self, quotes: &[OptionQuote]) -> Result<(f64, Vec<f64>), BenchError> {
        let mut grad = vec![0.0; self.net.params().len()];
        let mut dx = vec![0.0; 4];
        let mut scratch = Vec::new();
        let mut tape = Tape::new();
        let mut total = 0.0;
        for q in quotes {
            let y = self
                .net
                .forward(&features(q.strike, q.maturity, q.rate, q.spot), &mut tape)?;
            let resid = q.spot * y - q.price;
            total += resid * resid;
            self.net
                .backward_into(&tape, 2.0 * resid * q.spot, &mut grad, &mut dx, &mut scratch)?;
        }
        Ok((total, grad))
    }
}

/// Full-batch training on squared pricing error.
pub fn ann_train(quotes: &[OptionQuote], cfg: &AnnConfig, seed: u64) -> Result<AnnModel, BenchError> {
    if quotes.is_empty() {
        return Err(BenchError::BadInput("no training quotes".into()));
    }
    let level = quotes.iter().map(|q| q.price / q.spot).sum::<f64>() / quotes.len() as f64;
    let mut model = AnnModel::init(cfg, seed, level)?;
    let mut adam = AdamState::new(model.net.params().len());
    for epoch in 0..cfg.epochs {
        let (loss, grad) = match model.loss_and_gradient(quotes) {
            Ok(x) => x,
            Err(BenchError::Net(crate::tensor_net::NetError::NonFinite)) => return Err(BenchError::Diverged { epoch }),
            Err(e) => return Err(e),
        };
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(BenchError::Diverged { epoch });
        }
        model.history.push(loss);
        adam.step(
            &cfg.optimizer.at_epoch(epoch, cfg.epochs),
            model.net.params_mut(),
            &grad,
        );
    }
    Ok(model)
}

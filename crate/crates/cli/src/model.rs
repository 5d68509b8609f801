//! Trained-model files and pricing with them.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use jumpcal::benchmarks::{AnnModel, Calibrated};
use jumpcal::njsde::{price_call, TrainState};
use jumpcal::{ContractSpec, NoiseBank, OptionQuote, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ModelChoice;
use crate::manifest::write_json;
use crate::ValidationError;

pub const MODEL_FILE: &str = "model.json";

// Loaded once per run, so the size spread between variants does not matter.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    /// NJSDE or NSDE; pricing re-generates the noise bank from `config`.
    Neural {
        model: ModelChoice,
        config: TrainConfig,
        state: TrainState,
    },
    Ann {
        model: AnnModel,
    },
    Parametric {
        calibrated: Calibrated,
    },
}

impl TrainedModel {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| ValidationError(format!("{}: field `{}`: {}", path.display(), e.path(), e.inner())).into())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn choice(&self) -> ModelChoice {
        match self {
            TrainedModel::Neural { model, .. } => *model,
            TrainedModel::Ann { .. } => ModelChoice::Ann,
            TrainedModel::Parametric { calibrated } => match calibrated.model.kind() {
                jumpcal::benchmarks::ParametricKind::Bs => ModelChoice::Bs,
                jumpcal::benchmarks::ParametricKind::Heston => ModelChoice::Heston,
                jumpcal::benchmarks::ParametricKind::Svcj => ModelChoice::Svcj,
            },
        }
    }

    /// Model prices for `quotes`, in order.
    pub fn price(&self, quotes: &[OptionQuote]) -> Result<Vec<f64>> {
        Ok(match self {
            TrainedModel::Neural { config, state, .. } => {
                let bank = config.bank();
                price_neural(quotes, state, &bank, config)?
            }
            TrainedModel::Ann { model } => quotes.iter().map(|q| model.price_quote(q)).collect::<Result<_, _>>()?,
            TrainedModel::Parametric { calibrated } => calibrated.model.prices(quotes)?,
        })
    }
}

fn price_neural(quotes: &[OptionQuote], state: &TrainState, bank: &NoiseBank, cfg: &TrainConfig) -> Result<Vec<f64>> {
    let prices = quotes
        .par_iter()
        .map(|q| price_call(&ContractSpec::from_quote(q), &state.nets, bank, cfg).map(|r| r.price))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(prices)
}

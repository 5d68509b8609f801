use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{grad_loss, EngineError, NoiseBank, Target, TrainConfig};
use crate::optim::AdamState;
use crate::tensor_net::{NetError, NetworkSet};

pub const TRAIN_STATE_FORMAT: &str = "jumpcal-train-state";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Loss before this epoch's update.
    pub loss: f64,
    pub tau: f64,
}

/// Networks plus optimizer memory. Saving and reloading this between
/// epochs continues the run bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub format: String,
    pub init_seed: u64,
    pub epochs_done: usize,
    pub nets: NetworkSet,
    pub adam: AdamState,
    pub history: Vec<EpochRecord>,
}

impl TrainState {
    pub fn new(cfg: &TrainConfig, init_seed: u64) -> Result<Self, EngineError> {
        cfg.validate()?;
        let nets = NetworkSet::init(&cfg.arch, cfg.features.dim(), init_seed)?;
        Ok(Self::from_nets(nets, init_seed))
    }

    pub fn from_nets(nets: NetworkSet, init_seed: u64) -> Self {
        let adam = AdamState::new(nets.param_count());
        Self {
            format: TRAIN_STATE_FORMAT.to_string(),
            init_seed,
            epochs_done: 0,
            nets,
            adam,
            history: Vec::new(),
        }
    }

    /// Runs `epochs` more epochs. The temperature follows the schedule of
    /// `cfg.epochs` total epochs, holding its final value past the end.
    pub fn run(
        &mut self,
        targets: &[Target],
        cfg: &TrainConfig,
        bank: &NoiseBank,
        epochs: usize,
        mut on_epoch: impl FnMut(&EpochRecord),
    ) -> Result<(), EngineError> {
        for _ in 0..epochs {
            let epoch = self.epochs_done;
            let tau = cfg.relax.tau_at(epoch, cfg.epochs);
            let (loss, grad) = match grad_loss(targets, &self.nets, bank, cfg, tau) {
                Ok(x) => x,
                Err(EngineError::NonFinite { .. } | EngineError::Net(NetError::NonFinite)) => {
                    return Err(EngineError::Diverged { epoch })
                }
                Err(e) => return Err(e),
            };
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(EngineError::Diverged { epoch });
            }
            let rec = EpochRecord { epoch, loss, tau };
            on_epoch(&rec);
            self.history.push(rec);
            let mut params = self.nets.params_flat();
            self.adam
                .step(&cfg.optimizer.at_epoch(epoch, cfg.epochs), &mut params, &grad);
            self.nets.set_params_flat(&params)?;
            self.epochs_done += 1;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EngineError> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let st: Self = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if st.format != TRAIN_STATE_FORMAT {
            return Err(EngineError::BadConfig(format!(
                "not a training state: format {}",
                st.format
            )));
        }
        if st.adam.m.len() != st.nets.param_count() {
            return Err(EngineError::ShapeMismatch {
                what: "optimizer state",
                expected: st.nets.param_count(),
                got: st.adam.m.len(),
            });
        }
        Ok(st)
    }
}

/// Initializes networks from `init_seed`, draws the noise bank once and
/// runs `cfg.epochs` epochs.
pub fn train(targets: &[Target], cfg: &TrainConfig, init_seed: u64) -> Result<TrainState, EngineError> {
    if targets.is_empty() {
        return Err(EngineError::EmptyTargets);
    }
    let mut st = TrainState::new(cfg, init_seed)?;
    let bank = cfg.bank();
    st.run(targets, cfg, &bank, cfg.epochs, |_| {})?;
    Ok(st)
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use jumpcal::benchmarks::{ann_train, calibrate_parametric, CalibrationOptions, ParametricKind};
use jumpcal::market_data::{read_quotes, ColumnMap};
use jumpcal::njsde::{disable_jumps, TrainState};
use jumpcal::{Head, ModelKind, Target};
use serde_json::json;

use super::{check_distinct, create_out, require_path, validation};
use crate::config::{ModelChoice, RunConfig};
use crate::manifest::{Manifest, MANIFEST_FILE};
use crate::model::{TrainedModel, MODEL_FILE};
use crate::ValidationError;

pub const LOSS_FILE: &str = "loss.csv";

/// Fits the configured model and writes `model.json`, the loss history
/// (iterative models) and a manifest.
pub fn train(cfg: &RunConfig, out: &Path) -> Result<Manifest> {
    let seed = cfg.require_seed()?;
    let t = &cfg.train;
    let data = require_path(&t.data, "train.data")?;
    let mut inputs = vec![data];
    if let Some(r) = &t.resume {
        inputs.push(r);
    }
    check_distinct(&inputs, out, &[MODEL_FILE, LOSS_FILE, MANIFEST_FILE])?;
    let quotes = read_quotes(data, &ColumnMap::default())?;
    if quotes.is_empty() {
        bail!(ValidationError(format!("{} holds no quotes", data.display())));
    }
    let mut resolved = cfg.clone();
    let mut outputs = vec![MODEL_FILE.to_string()];

    let (trained, summary) = match t.model {
        ModelChoice::Njsde | ModelChoice::Nsde => {
            let engine = &mut resolved.train.engine;
            engine.model = if t.model == ModelChoice::Nsde {
                ModelKind::Nsde
            } else {
                ModelKind::Njsde
            };
            engine.bank_seed = seed;
            engine.validate().map_err(validation)?;
            let engine = engine.clone();
            let targets: Vec<Target> = quotes.iter().map(Target::from_quote).collect();
            let mut state = match &t.resume {
                Some(path) => match TrainedModel::load(path)? {
                    TrainedModel::Neural { model, config, state } if model == t.model && config == engine => state,
                    _ => bail!(ValidationError(format!(
                        "{} is not a checkpoint of this {} configuration",
                        path.display(),
                        t.model.name()
                    ))),
                },
                None => {
                    let mut s = TrainState::new(&engine, seed)?;
                    if t.model == ModelChoice::Nsde {
                        s.nets = disable_jumps(&s.nets);
                    }
                    s
                }
            };
            let until = t.stop_after.unwrap_or(engine.epochs).min(engine.epochs);
            let bank = engine.bank();
            state.run(
                &targets,
                &engine,
                &bank,
                until.saturating_sub(state.epochs_done),
                |_| {},
            )?;

            let mut w = csv_out(&out.join(LOSS_FILE), out)?;
            writeln!(w, "epoch,loss,tau")?;
            for r in &state.history {
                writeln!(w, "{},{},{}", r.epoch, r.loss, r.tau)?;
            }
            w.flush()?;
            outputs.push(LOSS_FILE.into());
            let clamped: Vec<&str> = Head::ALL
                .iter()
                .filter(|h| state.nets.is_clamped(**h))
                .map(|h| h.name())
                .collect();
            let summary = json!({
                "model": t.model.name(),
                "epochs_done": state.epochs_done,
                "final_loss": state.history.last().map(|r| r.loss),
                "clamped_heads": clamped,
            });
            (
                TrainedModel::Neural {
                    model: t.model,
                    config: engine,
                    state,
                },
                summary,
            )
        }
        ModelChoice::Ann => {
            let model = ann_train(&quotes, &t.ann, seed)?;
            let mut w = csv_out(&out.join(LOSS_FILE), out)?;
            writeln!(w, "epoch,loss")?;
            for (i, l) in model.history.iter().enumerate() {
                writeln!(w, "{i},{l}")?;
            }
            w.flush()?;
            outputs.push(LOSS_FILE.into());
            let summary = json!({
                "model": "ann",
                "epochs_done": model.history.len(),
                "final_loss": model.history.last(),
            });
            (TrainedModel::Ann { model }, summary)
        }
        ModelChoice::Bs | ModelChoice::Heston | ModelChoice::Svcj => {
            let kind = match t.model {
                ModelChoice::Bs => ParametricKind::Bs,
                ModelChoice::Heston => ParametricKind::Heston,
                _ => ParametricKind::Svcj,
            };
            resolved.train.calibration.seed = seed;
            let opts: &CalibrationOptions = &resolved.train.calibration;
            let calibrated = calibrate_parametric(kind, &quotes, opts)?;
            let summary = json!({
                "model": t.model.name(),
                "objective": calibrated.objective,
                "evaluations": calibrated.evaluations,
            });
            (TrainedModel::Parametric { calibrated }, summary)
        }
    };
    create_out(out)?;
    trained.save(&out.join(MODEL_FILE))?;
    let manifest = Manifest::new("train", &resolved, outputs, summary);
    manifest.write(out)?;
    Ok(manifest)
}

fn csv_out(path: &Path, out: &Path) -> Result<BufWriter<File>> {
    create_out(out)?;
    let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(BufWriter::new(f))
}

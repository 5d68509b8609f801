mod compare;
mod evaluate;
mod generate;
mod train;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::args::{Command, Common};
use crate::config::{self, RunConfig};
use crate::ValidationError;

pub use compare::compare;
pub use evaluate::{evaluate, SUMMARY_FILE};
pub use generate::{generate, TEST_FILE, TRAIN_FILE};
pub use train::{train, LOSS_FILE};

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    Ok(cfg)
}

/// Resolves flags against the config file, runs one subcommand and reports
/// what it wrote.
pub fn run(command: Command) -> Result<()> {
    let (manifest, out) = match command {
        Command::Generate { common, model, paths } => {
            let mut cfg = base_config(&common)?;
            if let Some(m) = model {
                cfg.generate.model = m;
            }
            if let Some(p) = paths {
                cfg.generate.mc.paths = p;
            }
            (generate(&cfg, &common.out)?, common.out)
        }
        Command::Train {
            common,
            model,
            data,
            epochs,
            paths,
            steps,
            resume,
            stop_after,
        } => {
            let mut cfg = base_config(&common)?;
            let t = &mut cfg.train;
            if let Some(m) = model {
                t.model = m;
            }
            if data.is_some() {
                t.data = data;
            }
            if let Some(e) = epochs {
                t.engine.epochs = e;
                t.ann.epochs = e;
            }
            if let Some(p) = paths {
                t.engine.paths = p;
            }
            if let Some(s) = steps {
                t.engine.steps = s;
            }
            if resume.is_some() {
                t.resume = resume;
            }
            if stop_after.is_some() {
                t.stop_after = stop_after;
            }
            (train(&cfg, &common.out)?, common.out)
        }
        Command::Evaluate {
            common,
            models,
            train_data,
            test_data,
        } => {
            let mut cfg = base_config(&common)?;
            let e = &mut cfg.evaluate;
            if !models.is_empty() {
                e.models = models;
            }
            if train_data.is_some() {
                e.train_data = train_data;
            }
            if test_data.is_some() {
                e.test_data = test_data;
            }
            (evaluate(&cfg, &common.out)?, common.out)
        }
        Command::Compare { common, reports } => {
            let mut cfg = base_config(&common)?;
            if !reports.is_empty() {
                cfg.compare.reports = reports;
            }
            (compare(&cfg, &common.out)?, common.out)
        }
    };
    println!(
        "{}: wrote {} to {}",
        manifest.command,
        manifest.outputs.join(", "),
        out.display()
    );
    println!("{}", manifest.summary);
    Ok(())
}

/// Fails when an input would be overwritten by one of the outputs.
fn check_distinct(inputs: &[&Path], out: &Path, outputs: &[&str]) -> Result<()> {
    let outs: Vec<PathBuf> = outputs
        .iter()
        .map(|o| std::path::absolute(out.join(o)))
        .collect::<Result<_, _>>()?;
    for input in inputs {
        let abs = std::path::absolute(input)?;
        if outs.contains(&abs) {
            bail!(ValidationError(format!("input {} is also an output", input.display())));
        }
    }
    Ok(())
}

fn create_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn require_path<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    match p {
        Some(p) => Ok(p),
        None => bail!(ValidationError(format!("missing `{what}`"))),
    }
}

fn validation(e: impl std::fmt::Display) -> anyhow::Error {
    ValidationError(e.to_string()).into()
}

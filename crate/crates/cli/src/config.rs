//! Run configuration: one JSON document shared by every subcommand, with
//! command-line flags layered on top.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use jumpcal::benchmarks::{AnnConfig, CalibrationOptions, HestonParams, McSettings, SvcjParams};
use jumpcal::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::manifest::MANIFEST_FORMAT;
use crate::ValidationError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives every random choice of a command. Required, either here or
    /// via `--seed`.
    pub seed: Option<u64>,
    pub generate: GenerateConfig,
    pub train: TrainSection,
    pub evaluate: EvaluateConfig,
    pub compare: CompareConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    #[default]
    Heston,
    Svcj,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub model: GeneratorKind,
    pub heston: HestonParams,
    pub svcj: SvcjParams,
    /// SVCJ simulation settings; the seed comes from the run seed.
    pub mc: McSettings,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            model: GeneratorKind::Heston,
            heston: HestonParams::baseline(),
            svcj: SvcjParams::baseline(),
            mc: McSettings {
                paths: 1_000_000,
                ..McSettings::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    #[default]
    Njsde,
    Nsde,
    Ann,
    Bs,
    Heston,
    Svcj,
}

impl ModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            ModelChoice::Njsde => "njsde",
            ModelChoice::Nsde => "nsde",
            ModelChoice::Ann => "ann",
            ModelChoice::Bs => "bs",
            ModelChoice::Heston => "heston",
            ModelChoice::Svcj => "svcj",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub model: ModelChoice,
    /// Training quotes (market-data CSV).
    pub data: Option<PathBuf>,
    /// Checkpoint of an interrupted neural run to continue from.
    pub resume: Option<PathBuf>,
    /// Stop a neural run once this many epochs are done; the schedule still
    /// spans `engine.epochs`, so the run can be resumed later.
    pub stop_after: Option<usize>,
    pub engine: TrainConfig,
    pub ann: AnnConfig,
    pub calibration: CalibrationOptions,
}

/// A labelled file: a trained model for `evaluate`, a report for `compare`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelRef {
    pub label: String,
    pub path: PathBuf,
}

impl std::str::FromStr for ModelRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (label, path) = s
            .split_once('=')
            .ok_or_else(|| format!("expected LABEL=PATH, got `{s}`"))?;
        if label.is_empty() || path.is_empty() {
            return Err(format!("expected LABEL=PATH, got `{s}`"));
        }
        Ok(Self {
            label: label.to_string(),
            path: PathBuf::from(path),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub models: Vec<ModelRef>,
    pub train_data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Out-of-sample report files written by `evaluate`.
    pub reports: Vec<ModelRef>,
}

/// Reads a run config, or the config embedded in a manifest. Field errors
/// carry their JSON path.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text).with_context(|| format!("in config {}", path.display()))
}

pub fn parse(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ValidationError(format!("not valid JSON: {e}")))?;
    let value = match value.get("format").and_then(|f| f.as_str()) {
        Some(MANIFEST_FORMAT) => value
            .get("config")
            .cloned()
            .ok_or_else(|| ValidationError("manifest without a `config` field".into()))?,
        _ => value,
    };
    let cfg: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        ValidationError(format!("field `{path}`: {}", e.into_inner()))
    })?;
    Ok(cfg)
}

impl RunConfig {
    pub fn require_seed(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None => bail!(ValidationError(
                "a seed is required (--seed or `seed` in the config)".into()
            )),
        }
    }
}

//! Run manifests. A manifest holds the resolved config of a command and
//! nothing time-dependent, so re-running it reproduces the outputs byte for
//! byte.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const MANIFEST_FORMAT: &str = "jumpcal-manifest";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    /// Files written next to the manifest.
    pub outputs: Vec<String>,
    /// Command-specific facts about the run.
    pub summary: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, outputs: Vec<String>, summary: serde_json::Value) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            outputs,
            summary,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(MANIFEST_FILE), self)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

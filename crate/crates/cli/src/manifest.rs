//! Per-run manifest: what was run, with which configuration, what it wrote
//! and how long it took.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mforge_core::nn::mlp::CHECKPOINT_FORMAT;
use mforge_core::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epoch_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Command line as invoked.
    pub args: Vec<String>,
    /// Full configuration after presets and overrides.
    pub config: serde_json::Value,
    /// Files written, relative to the run directory.
    pub artifacts: Vec<String>,
    pub versions: BTreeMap<String, String>,
    pub timing: Timing,
}

impl RunManifest {
    pub fn new(command: &str, args: &[String], config: serde_json::Value) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("mforge".to_string(), env!("CARGO_PKG_VERSION").to_string());
        versions.insert(
            "checkpoint_format".to_string(),
            CHECKPOINT_FORMAT.to_string(),
        );
        Self {
            command: command.to_string(),
            args: args.to_vec(),
            config,
            artifacts: Vec::new(),
            versions,
            timing: Timing::default(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path,
            row: e.line(),
            message: e.to_string(),
        })
    }
}

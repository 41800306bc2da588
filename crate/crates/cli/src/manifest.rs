//! Run manifests: every report-writing command drops a `manifest.json`
//! holding its fully resolved parameters, so `modecert rerun` reproduces
//! the report files byte-for-byte (the manifest itself carries wall-clock
//! timing and is excluded from that guarantee).

use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use modecert::certifier::CertifierConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateParams {
    pub setting: u8,
    pub methods: Vec<String>,
    pub case: String,
    pub budgets: Vec<u64>,
    pub reps: u32,
    pub seed: u64,
    pub weight_gamma: f64,
    pub certifier: CertifierConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestParams {
    pub pool: String,
    pub methods: Vec<String>,
    pub case: String,
    pub budgets: Vec<u64>,
    pub reps: u32,
    pub seed: u64,
    pub weight_gamma: f64,
    pub certifier: CertifierConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepParams {
    pub vary: String,
    pub values: Vec<f64>,
    pub fixed: f64,
    pub reps: u32,
    pub horizon: u64,
    pub seed: u64,
    pub certifier: CertifierConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum ManifestCommand {
    Simulate(SimulateParams),
    Ingest(IngestParams),
    Sweep(SweepParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: ManifestCommand,
    pub seed: u64,
    pub artifact_version: String,
    pub outputs: Vec<String>,
    pub wall_clock_ms: u64,
}

impl RunManifest {
    pub fn new(
        command: ManifestCommand,
        seed: u64,
        outputs: Vec<String>,
        elapsed: Duration,
    ) -> Self {
        Self {
            command,
            seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_owned(),
            outputs,
            wall_clock_ms: elapsed.as_millis() as u64,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).with_context(|| format!("write {}", path.display()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parse {}", path.display()))
    }
}

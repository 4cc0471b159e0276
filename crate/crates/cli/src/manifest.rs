//! Run manifests: enough to re-execute a command and check its inputs.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: serde_json::Value,
    pub inputs: Vec<InputRecord>,
    /// SHA-256 over the concatenated input digests.
    pub inputs_hash: String,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
    pub results: serde_json::Value,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub struct ManifestBuilder {
    command: String,
    argv: Vec<String>,
    started_at: String,
    inputs: Vec<InputRecord>,
    outputs: Vec<String>,
}

impl ManifestBuilder {
    pub fn start(command: &str) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            started_at: now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputRecord {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn finish(
        self,
        config: serde_json::Value,
        seeds: serde_json::Value,
        results: serde_json::Value,
    ) -> RunManifest {
        let mut h = Sha256::new();
        for i in &self.inputs {
            h.update(i.sha256.as_bytes());
        }
        RunManifest {
            tool: "vqct",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            argv: self.argv,
            config,
            seeds,
            inputs: self.inputs,
            inputs_hash: hex::encode(h.finalize()),
            outputs: self.outputs,
            started_at: self.started_at,
            finished_at: now(),
            results,
        }
    }
}

//! Run manifests: the resolved configuration, seed, tool version and input
//! digests of a run. Everything except the timing block is sufficient to
//! reproduce the output files byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::errors::CliResult;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    /// Fully resolved arguments, defaults included.
    pub config: serde_json::Value,
    /// SHA-256 of every input file.
    pub input_digests: BTreeMap<String, String>,
    /// Wall-clock seconds; informational only, excluded from
    /// reproducibility guarantees.
    pub timing_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: "ssarx",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config,
            input_digests: BTreeMap::new(),
            timing_seconds: 0.0,
        }
    }

    pub fn digest_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = fs::read(path)?;
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        self.input_digests.insert(path.display().to_string(), hex);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| crate::errors::CliError::Data(e.to_string()))?;
        fs::write(path, json + "\n")?;
        Ok(())
    }
}

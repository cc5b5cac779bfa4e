use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    /// Relative to the working directory.
    pub path: PathBuf,
    pub sha256: String,
}

/// Record of one command run. Everything except `wall_ms` is a function of
/// the inputs and flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Resolved settings the command ran with.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
    pub wall_ms: u128,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn add_input(&mut self, workdir: &Path, rel: &Path) -> Result<()> {
        let full = workdir.join(rel);
        let bytes = std::fs::read(&full).map_err(|e| CliError::io(&full, e))?;
        self.inputs.push(FileHash {
            path: rel.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn add_output(&mut self, rel: &Path, bytes: &[u8]) {
        self.outputs.push(FileHash {
            path: rel.to_path_buf(),
            sha256: sha256_hex(bytes),
        });
    }

    /// Hashes of the outputs currently on disk differ from the recorded ones.
    pub fn stale_outputs(&self, workdir: &Path) -> Vec<PathBuf> {
        self.outputs
            .iter()
            .filter(|o| std::fs::read(workdir.join(&o.path)).map(|b| sha256_hex(&b) != o.sha256).unwrap_or(true))
            .map(|o| o.path.clone())
            .collect()
    }
}

//! Run manifest: seed, resolved config, asset and output hashes.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: PipelineConfig,
    /// Input assets, sorted by name.
    pub assets: Vec<FileRecord>,
    /// Emitted files, sorted by name.
    pub outputs: Vec<FileRecord>,
}

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub name: String,
    /// "provided:<path>" or "synthesized".
    pub source: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| anyhow::anyhow!("cannot hash {}: {e}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(seed: u64, config: PipelineConfig) -> Self {
        Self {
            tool: "topics-lab",
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            assets: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record_asset(&mut self, name: &str, source: String, path: &Path) -> anyhow::Result<()> {
        self.assets.push(FileRecord {
            name: name.to_string(),
            source,
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn record_output(&mut self, name: &str, path: &Path) -> anyhow::Result<()> {
        self.outputs.push(FileRecord {
            name: name.to_string(),
            source: "emitted".to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn write(&mut self, path: &Path) -> anyhow::Result<()> {
        self.assets.sort_by(|a, b| a.name.cmp(&b.name));
        self.outputs.sort_by(|a, b| a.name.cmp(&b.name));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

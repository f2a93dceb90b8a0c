use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioEntry {
    pub name: String,
    pub group: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seconds: f64,
    pub files: Vec<String>,
}

/// Record of one invocation, written last.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub output_dir: String,
    /// SHA-256 over the configuration bytes that drove the run.
    pub config_hash: String,
    pub scenarios: Vec<ScenarioEntry>,
    /// Summary and timing tables at the output root.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, out: &Path, config_hash: String) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_owned(),
            command: command.to_owned(),
            output_dir: out.display().to_string(),
            config_hash,
            scenarios: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn failures(&self) -> usize {
        self.scenarios.iter().filter(|s| s.status == Status::Failed).count()
    }

    pub fn write(&self, out: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(out.join(MANIFEST_FILE), text)
    }
}

/// Hex SHA-256 of `chunks`, each length-prefixed so boundaries count.
pub fn config_hash<'a>(chunks: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut hasher = Sha256::new();
    for chunk in chunks {
        hasher.update((chunk.len() as u64).to_le_bytes());
        hasher.update(chunk);
    }
    hex::encode(hasher.finalize())
}

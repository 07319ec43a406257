//! Provenance envelope shared by every output file.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, config: &RunConfig) -> Self {
        Self { tool: TOOL.into(), version: VERSION.into(), command: command.into(), seed, config: config.clone() }
    }

    /// `#`-prefixed lines placed above CSV headers.
    pub fn csv_preamble(&self) -> Result<String> {
        Ok(format!(
            "# {} {} command={} seed={}\n# config={}\n",
            self.tool,
            self.version,
            self.command,
            self.seed,
            serde_json::to_string(&self.config)?
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub provenance: Provenance,
    pub result: T,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// CSV text with the provenance preamble.
pub fn csv_with_preamble(prov: &Provenance, body: &str) -> Result<String> {
    Ok(prov.csv_preamble()? + body)
}

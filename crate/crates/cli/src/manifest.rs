use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Everything needed to redo a run: written next to its outputs. Holds no
/// timestamps or absolute paths, so reruns produce identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub subcommand: String,
    pub version: String,
    pub config: C,
    pub master_seed: Option<u64>,
    /// Output file names, relative to the manifest.
    pub outputs: Vec<String>,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(subcommand: &str, config: C, master_seed: Option<u64>, outputs: Vec<String>) -> Self {
        Self {
            subcommand: subcommand.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config,
            master_seed,
            outputs,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// `<path>.manifest.json`
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned())
}

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Written next to the artifacts of every run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: u64,
    /// Paths relative to the output directory, sorted.
    pub artifacts: Vec<String>,
    pub wall_clock_s: f64,
    /// SHA-256 over the subcommand, the resolved config and every input file.
    pub content_hash: String,
}

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn content_hash(subcommand: &str, config: &serde_json::Value, inputs: &[PathBuf]) -> Result<String, CliError> {
    let mut h = Sha256::new();
    h.update(subcommand.as_bytes());
    h.update([0]);
    h.update(config.to_string().as_bytes());
    let mut inputs: Vec<&PathBuf> = inputs.iter().collect();
    inputs.sort();
    for p in inputs {
        h.update([0]);
        h.update(std::fs::read(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?);
    }
    Ok(hex::encode(h.finalize()))
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            walk(&p, out)?;
        } else {
            out.push(p);
        }
    }
    Ok(())
}

/// Expands directories into the files beneath them and returns the sorted,
/// de-duplicated list relative to `root`.
pub fn expand(root: &Path, paths: &[PathBuf]) -> Result<Vec<String>, CliError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            walk(p, &mut files).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
        } else {
            files.push(p.clone());
        }
    }
    let mut rel: Vec<String> =
        files.iter().map(|f| f.strip_prefix(root).unwrap_or(f).to_string_lossy().replace('\\', "/")).collect();
    rel.sort();
    rel.dedup();
    Ok(rel)
}

impl RunManifest {
    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let path = out_dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(&path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }
}

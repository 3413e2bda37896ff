//! Checkpoints: every parameter flattened into a single rank-1 tensor file,
//! plus a JSON sidecar (same stem, `.json`) holding the architecture, the
//! tensor table and training metadata.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::network::{ArchConfig, RegressorParams};
use crate::error::{Error, Result};
use crate::tensor_io::RawTensor;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub round: Option<u32>,
    pub dataset_size: usize,
    pub best_val_loss: Option<f64>,
    pub epochs_run: usize,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    arch: ArchConfig,
    tensors: Vec<TensorEntry>,
    meta: CheckpointMeta,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn save_checkpoint(params: &RegressorParams, path: &Path, meta: &CheckpointMeta) -> Result<()> {
    let mut data = Vec::with_capacity(params.num_parameters());
    let mut tensors = Vec::new();
    for (name, t) in params.tensors() {
        tensors.push(TensorEntry { name, shape: t.shape.clone(), offset: data.len() });
        data.extend(t.data.iter().map(|&v| v as f32));
    }
    RawTensor::new(vec![data.len()], data)?.save(path)?;
    let side = Sidecar { arch: params.arch.clone(), tensors, meta: meta.clone() };
    let sp = sidecar_path(path);
    std::fs::write(&sp, serde_json::to_string_pretty(&side)?).map_err(|e| Error::io(&sp, e))
}

/// Loads a checkpoint, checking every tensor against the recorded
/// architecture.
pub fn load_checkpoint(path: &Path) -> Result<(RegressorParams, CheckpointMeta)> {
    let sp = sidecar_path(path);
    let text = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
    let side: Sidecar = serde_json::from_str(&text)?;
    side.arch.validate()?;
    let raw = RawTensor::load(path)?;
    let mut params = RegressorParams::zeros(&side.arch);
    let mut slots = params.tensors_mut();
    if slots.len() != side.tensors.len() {
        return Err(Error::TensorFormat(format!(
            "checkpoint lists {} tensors, architecture has {}",
            side.tensors.len(),
            slots.len()
        )));
    }
    for ((name, slot), entry) in slots.iter_mut().zip(&side.tensors) {
        if *name != entry.name || slot.shape != entry.shape {
            return Err(Error::ShapeMismatch { name: entry.name.clone(), expected: slot.shape.clone(), got: entry.shape.clone() });
        }
        let end = entry.offset + slot.data.len();
        let src = raw
            .data
            .get(entry.offset..end)
            .ok_or_else(|| Error::TensorFormat(format!("{}: payload too short", entry.name)))?;
        for (d, &s) in slot.data.iter_mut().zip(src) {
            *d = s as f64;
        }
    }
    Ok((params, side.meta))
}

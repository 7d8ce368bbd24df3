use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Model, ModelConfig};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    schema_version: u32,
    model_config: ModelConfig,
    labels: Vec<String>,
    tensors: Vec<NamedTensor>,
}

/// A model together with the descriptor names of its output columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub labels: Vec<String>,
}

/// Writes the model as JSON. Floats round-trip exactly.
pub fn save_checkpoint(model: &Model, labels: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if labels.len() != model.config().num_labels {
        return Err(Error::SchemaVersionMismatch(format!(
            "{} label names for a model with {} outputs",
            labels.len(),
            model.config().num_labels
        )));
    }
    let file = CheckpointFile {
        schema_version: SCHEMA_VERSION,
        model_config: model.config().clone(),
        labels: labels.to_vec(),
        tensors: model
            .tensors()
            .into_iter()
            .map(|(name, t)| NamedTensor {
                name,
                rows: t.rows(),
                cols: t.cols(),
                data: t.as_slice().to_vec(),
            })
            .collect(),
    };
    let json = serde_json::to_string(&file).map_err(|e| Error::CorruptCheckpoint {
        path: path.to_path_buf(),
        source: e,
    })?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    // read the version first so an old layout reports a version error, not a parse error
    let header: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::CorruptCheckpoint {
        path: path.to_path_buf(),
        source: e,
    })?;
    match header.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        other => {
            return Err(Error::SchemaVersionMismatch(format!(
                "expected schema_version {SCHEMA_VERSION}, found {other:?}"
            )))
        }
    }
    let file: CheckpointFile = serde_json::from_value(header).map_err(|e| Error::CorruptCheckpoint {
        path: path.to_path_buf(),
        source: e,
    })?;
    if file.labels.len() != file.model_config.num_labels {
        return Err(Error::SchemaVersionMismatch(format!(
            "{} label names but model_config.num_labels = {}",
            file.labels.len(),
            file.model_config.num_labels
        )));
    }
    let mut model = Model::new(file.model_config)?;
    let mut slots = model.tensors_mut();
    if slots.len() != file.tensors.len() {
        return Err(Error::SchemaVersionMismatch(format!(
            "expected {} tensors, found {}",
            slots.len(),
            file.tensors.len()
        )));
    }
    for ((name, slot), stored) in slots.iter_mut().zip(file.tensors) {
        if *name != stored.name || slot.shape() != (stored.rows, stored.cols) {
            return Err(Error::SchemaVersionMismatch(format!(
                "tensor `{}` {:?} does not match expected `{name}` {:?}",
                stored.name,
                (stored.rows, stored.cols),
                slot.shape()
            )));
        }
        let m = Matrix::new(stored.rows, stored.cols, stored.data)
            .map_err(|_| Error::SchemaVersionMismatch(format!("tensor `{name}` has wrong length")))?;
        **slot = m;
    }
    drop(slots);
    Ok(Checkpoint {
        model,
        labels: file.labels,
    })
}

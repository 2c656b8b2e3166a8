//! JSON checkpoints.
//!
//! Layout (`format_version` 1):
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "kind": "pose" | "refiner" | "mapper" | "generic",
//!   "latent_dim": 32,
//!   "input_dim": ..., "condition_dim": ..., "hidden": ...,
//!   "basis": null | {"seed": u64, "size": n, "cage_half_extent": h},
//!   "epochs_trained": ...,
//!   "condition_encoder": [layer, ...],
//!   "encoder": [layer, ...],
//!   "decoder": [layer, ...]
//! }
//! layer = {"rows": in, "cols": out, "activation": "relu" | ...,
//!          "weights": [row-major rows*cols], "bias": [cols]}
//! ```
//!
//! Floats are written with shortest round-trip formatting, so save/load is
//! lossless.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::cvae::{BasisInfo, CvaeModel, ModelKind};
use super::layer::{Activation, DenseLayer, Mlp};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerRecord {
    rows: usize,
    cols: usize,
    activation: Activation,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointRecord {
    format_version: u32,
    kind: ModelKind,
    latent_dim: usize,
    input_dim: usize,
    condition_dim: usize,
    hidden: usize,
    basis: Option<BasisInfo>,
    epochs_trained: usize,
    condition_encoder: Vec<LayerRecord>,
    encoder: Vec<LayerRecord>,
    decoder: Vec<LayerRecord>,
}

fn layers_to_records(mlp: &Mlp) -> Vec<LayerRecord> {
    mlp.layers()
        .iter()
        .map(|l| LayerRecord {
            rows: l.inputs(),
            cols: l.outputs(),
            activation: l.activation,
            weights: l.weights.transpose().as_slice().to_vec(),
            bias: l.bias.as_slice().to_vec(),
        })
        .collect()
}

fn records_to_mlp(records: &[LayerRecord], name: &str) -> Result<Mlp> {
    let schema = |message: String| Error::Schema {
        path: name.to_string(),
        message,
    };
    let mut layers = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        if r.weights.len() != r.rows * r.cols {
            return Err(schema(format!(
                "layer {i}: expected {} weights, found {}",
                r.rows * r.cols,
                r.weights.len()
            )));
        }
        let weights = DMatrix::from_row_slice(r.rows, r.cols, &r.weights);
        let layer = DenseLayer::new(weights, DVector::from_vec(r.bias.clone()), r.activation)
            .map_err(|e| schema(format!("layer {i}: {e}")))?;
        layers.push(layer);
    }
    Mlp::new(layers).map_err(|e| schema(e.to_string()))
}

impl CvaeModel {
    pub fn to_json(&self) -> Result<String> {
        let record = CheckpointRecord {
            format_version: FORMAT_VERSION,
            kind: self.kind,
            latent_dim: self.latent_dim,
            input_dim: self.input_dim(),
            condition_dim: self.condition_dim(),
            hidden: self.hidden(),
            basis: self.basis.clone(),
            epochs_trained: self.epochs_trained,
            condition_encoder: layers_to_records(&self.condition_encoder),
            encoder: layers_to_records(&self.encoder),
            decoder: layers_to_records(&self.decoder),
        };
        Ok(serde_json::to_string(&record)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: CheckpointRecord = serde_json::from_str(text)?;
        if r.format_version != FORMAT_VERSION {
            return Err(Error::Schema {
                path: "format_version".into(),
                message: format!("unsupported version {}", r.format_version),
            });
        }
        let model = CvaeModel::from_parts(
            r.kind,
            records_to_mlp(&r.condition_encoder, "condition_encoder")?,
            records_to_mlp(&r.encoder, "encoder")?,
            records_to_mlp(&r.decoder, "decoder")?,
            r.latent_dim,
            r.basis,
            r.epochs_trained,
        )?;
        let meta = [
            ("input_dim", r.input_dim, model.input_dim()),
            ("condition_dim", r.condition_dim, model.condition_dim()),
            ("hidden", r.hidden, model.hidden()),
        ];
        for (path, declared, actual) in meta {
            if declared != actual {
                return Err(Error::Schema {
                    path: path.into(),
                    message: format!("declared {declared}, layers imply {actual}"),
                });
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CvaeModel::from_json(&text)
    }
}

//! Model checkpoint files.
//!
//! A checkpoint is a JSON document:
//!
//! ```text
//! {
//!   "format": "loadcast-checkpoint",
//!   "version": 1,
//!   "model": { cell_kind, layer_sizes, dense_sizes, input_dim, seed },
//!   "train": { epochs, batch_size, learning_rate, ... },
//!   "scaler": { "rows": [ {min, max} | null, ... ], "target": {min, max} },
//!   "window": { n_points, scheme, conditions, stride } | null,
//!   "calendar": { holidays, week_start } | null,
//!   "loss_trace": [ ... ],
//!   "tensors": [ { "name": "layer0.update.w", "shape": [64, 10], "values": [...] }, ... ]
//! }
//! ```
//!
//! Tensors appear in storage order; matrices are row-major with shape
//! `[rows, cols]`. Floats are written with round-trip precision.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{ModelConfig, Network};
use super::train::{TrainConfig, TrainedModel};
use crate::error::{Error, Result};
use crate::features::{CalendarConfig, Scaler, WindowSpec};

pub const FORMAT: &str = "loadcast-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    model: ModelConfig,
    train: TrainConfig,
    scaler: Scaler,
    window: Option<WindowSpec>,
    calendar: Option<CalendarConfig>,
    loss_trace: Vec<f64>,
    tensors: Vec<TensorRecord>,
}

/// A trained model plus the input description needed to rebuild its windows.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: TrainedModel,
    pub window: Option<WindowSpec>,
    pub calendar: Option<CalendarConfig>,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let net = &self.model.network;
        let tensors = net
            .tensors()
            .into_iter()
            .map(|t| TensorRecord {
                values: net.params()[t.offset..t.offset + t.len()].to_vec(),
                name: t.name,
                shape: t.shape,
            })
            .collect();
        let file = CheckpointFile {
            format: FORMAT.into(),
            version: VERSION,
            model: net.config().clone(),
            train: self.model.train_config.clone(),
            scaler: self.model.scaler.clone(),
            window: self.window.clone(),
            calendar: self.calendar.clone(),
            loss_trace: self.model.loss_trace.clone(),
            tensors,
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Json { context: "encoding checkpoint".into(), source: e })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile =
            serde_json::from_str(text).map_err(|e| Error::Json { context: "decoding checkpoint".into(), source: e })?;
        if file.format != FORMAT {
            return Err(Error::Invalid(format!("not a checkpoint (format `{}`)", file.format)));
        }
        if file.version != VERSION {
            return Err(Error::Invalid(format!("unsupported checkpoint version {}", file.version)));
        }
        let mut network = Network::zeros(&file.model)?;
        let layout = network.tensors();
        if layout.len() != file.tensors.len() {
            return Err(Error::Shape(format!("checkpoint has {} tensors, model needs {}", file.tensors.len(), layout.len())));
        }
        let mut params = vec![0.0; network.param_count()];
        for (want, got) in layout.iter().zip(&file.tensors) {
            if want.name != got.name || want.shape != got.shape || got.values.len() != want.len() {
                return Err(Error::Shape(format!(
                    "tensor `{}` {:?} does not match expected `{}` {:?}",
                    got.name, got.shape, want.name, want.shape
                )));
            }
            params[want.offset..want.offset + want.len()].copy_from_slice(&got.values);
        }
        network.set_params(params)?;
        Ok(Checkpoint {
            model: TrainedModel { network, scaler: file.scaler, train_config: file.train, loss_trace: file.loss_trace },
            window: file.window,
            calendar: file.calendar,
        })
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    crate::ingest::write_file(path, &checkpoint.to_json()?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Checkpoint::from_json(&text)
}

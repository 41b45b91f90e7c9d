//! Versioned JSON checkpoints.
//!
//! Layout: `format`, `version`, the training configuration, the parameter
//! list as `{key, shape, values}` entries in key order, and optionally the
//! full resumable training state. Floats are written with round-trip
//! precision, so reading a checkpoint back yields bitwise-identical values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::{ParamKey, ParamStore};
use crate::train::{TrainConfig, TrainState};

pub const FORMAT: &str = "protqtn-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckpointError {
    #[error("not a checkpoint: {0}")]
    Parse(String),
    #[error("unsupported checkpoint format `{format}` version {version}")]
    UnsupportedVersion { format: String, version: u32 },
    #[error("parameter `{key}` has shape {shape:?} but {values} values")]
    ShapeMismatch { key: ParamKey, shape: Vec<usize>, values: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub key: ParamKey,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: TrainConfig,
    /// The parameters a model built from this checkpoint uses.
    pub params: Vec<ParamEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<TrainState>,
}

impl Checkpoint {
    pub fn new(config: TrainConfig, store: &ParamStore, state: Option<TrainState>) -> Self {
        let params = store
            .entries
            .iter()
            .map(|(k, v)| ParamEntry { key: *k, shape: vec![v.len()], values: v.clone() })
            .collect();
        Self { format: FORMAT.to_string(), version: VERSION, config, params, state }
    }

    pub fn store(&self) -> Result<ParamStore, CheckpointError> {
        let mut store = ParamStore::new(self.config.model.sharing);
        for p in &self.params {
            if p.shape.iter().product::<usize>() != p.values.len() {
                return Err(CheckpointError::ShapeMismatch { key: p.key, shape: p.shape.clone(), values: p.values.len() });
            }
            store.insert(p.key, p.values.clone());
        }
        Ok(store)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let h: Header = serde_json::from_str(text).map_err(|e| CheckpointError::Parse(e.to_string()))?;
        if h.format != FORMAT || h.version != VERSION {
            return Err(CheckpointError::UnsupportedVersion { format: h.format, version: h.version });
        }
        serde_json::from_str(text).map_err(|e| CheckpointError::Parse(e.to_string()))
    }
}

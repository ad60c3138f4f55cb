use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{EncoderParams, ModelDims, Tensor, TENSOR_NAMES};
use super::train::{Model, TrainConfig};
use super::vocab::Vocab;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "logicclip-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// On-disk model: every tensor by name, the vocabulary and the training config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub dims: ModelDims,
    pub tensors: Vec<NamedTensor>,
    pub vocab: Vocab,
    pub config: TrainConfig,
}

impl Checkpoint {
    pub fn new(model: &Model, config: &TrainConfig) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            dims: model.params.dims,
            tensors: model
                .params
                .named()
                .map(|(name, t)| NamedTensor { name: name.into(), shape: t.shape.clone(), data: t.data.clone() })
                .collect(),
            vocab: model.vocab.clone(),
            config: config.clone(),
        }
    }

    pub fn into_model(self) -> Result<(Model, TrainConfig)> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint {} v{}", self.format, self.version)));
        }
        let mut params = EncoderParams {
            dims: self.dims,
            token_embeddings: Tensor::zeros(&[0]),
            text_weight: Tensor::zeros(&[0]),
            text_bias: Tensor::zeros(&[0]),
            image_hidden_weight: Tensor::zeros(&[0]),
            image_hidden_bias: Tensor::zeros(&[0]),
            image_weight: Tensor::zeros(&[0]),
            image_bias: Tensor::zeros(&[0]),
            logic_weight: Tensor::zeros(&[0]),
            logic_bias: Tensor::zeros(&[0]),
            log_temperature: Tensor::zeros(&[0]),
        };
        let mut seen = [false; TENSOR_NAMES.len()];
        for nt in self.tensors {
            let k = TENSOR_NAMES
                .iter()
                .position(|n| *n == nt.name)
                .ok_or_else(|| Error::Format(format!("unknown tensor {:?}", nt.name)))?;
            if nt.shape.iter().product::<usize>() != nt.data.len() {
                return Err(Error::Format(format!("tensor {}: shape/data length mismatch", nt.name)));
            }
            *params.tensors_mut()[k] = Tensor { shape: nt.shape, data: nt.data };
            seen[k] = true;
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::Format(format!("missing tensor {}", TENSOR_NAMES[k])));
        }
        for (name, (a, shape)) in TENSOR_NAMES.iter().zip(params.tensors().iter().zip(self.dims.shapes())) {
            if a.shape != shape {
                return Err(Error::Format(format!("tensor {name}: shape {:?}, expected {shape:?}", a.shape)));
            }
        }
        if self.vocab.len() != self.dims.vocab {
            return Err(Error::Format("vocabulary size does not match dims".into()));
        }
        Ok((Model { params, vocab: self.vocab }, self.config))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(self)?)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::CheckpointNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

pub fn save_model(path: &Path, model: &Model, config: &TrainConfig) -> Result<()> {
    Checkpoint::new(model, config).save(path)
}

pub fn load_model(path: &Path) -> Result<(Model, TrainConfig)> {
    Checkpoint::load(path)?.into_model()
}

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{init_params, ModelConfig, ModelKind, ModelParams};
use crate::data::{NormStats, SplitRatios};
use crate::error::{Error, Result};
use crate::graph::ParamSet;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// How the training data was split, so other commands can rebuild the same
/// val/test windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub ratios: SplitRatios,
    pub gap: usize,
}

/// Everything needed to rerun a trained model on raw frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub config: ModelConfig,
    pub norm_stats: NormStats,
    pub split: SplitSpec,
    pub params: BTreeMap<String, StoredTensor>,
}

impl Checkpoint {
    pub fn new(model: &ModelParams, norm_stats: NormStats, split: SplitSpec) -> Self {
        let params = model
            .params()
            .into_iter()
            .map(|p| {
                (
                    p.name.clone(),
                    StoredTensor {
                        shape: p.value.shape().to_vec(),
                        values: p.value.values().to_vec(),
                    },
                )
            })
            .collect();
        Self {
            kind: model.kind,
            config: model.config,
            norm_stats,
            split,
            params,
        }
    }

    /// Rebuilds the model; every expected parameter must be present with the
    /// right shape and no extras are allowed.
    pub fn model(&self) -> Result<ModelParams> {
        let mut model = init_params(self.kind, self.config, 0)?;
        let mut seen = 0;
        for p in model.params_mut() {
            let stored = self
                .params
                .get(&p.name)
                .ok_or_else(|| Error::contract(format!("checkpoint is missing parameter `{}`", p.name)))?;
            if stored.shape != p.value.shape() {
                return Err(Error::shape("checkpoint", &stored.shape, p.value.shape()));
            }
            p.value = Tensor::new(stored.shape.clone(), stored.values.clone())?;
            seen += 1;
        }
        if seen != self.params.len() {
            return Err(Error::contract("checkpoint holds parameters this model kind does not use"));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        ck.norm_stats.validate()?;
        Ok(ck)
    }
}

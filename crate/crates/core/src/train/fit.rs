use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, clip_grad_norm, AdamConfig, AdamState};
use super::loss::evaluate_loss;
use crate::data::WindowSample;
use crate::error::{Error, Result};
use crate::model::{accumulate_gradients, init_params, ModelConfig, ModelKind, ModelParams};

/// Mixed into the seed for the shuffling stream so it differs from the
/// initialization stream.
const SHUFFLE_STREAM: u64 = 0x5348_5546_464c_4521;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
    pub shuffle: bool,
    /// Global gradient-norm cap; off by default.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
            shuffle: true,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::contract("epochs and batch_size must be >= 1"));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::contract(format!("learning rate must be finite and >= 0, got {}", self.lr)));
        }
        if matches!(self.clip_norm, Some(c) if c.is_nan() || c <= 0.0) {
            return Err(Error::contract("clip_norm must be positive"));
        }
        Ok(())
    }
}

/// Losses are normalized-space MSE. `train_loss` is the running mean over the
/// epoch's minibatches; val/test come from an evaluation pass after the
/// epoch's last update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub test_loss: Option<f64>,
    pub lambda_emo: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    /// Parameters after the final epoch.
    pub params: ModelParams,
    /// Parameters from the epoch with the lowest validation loss, when a
    /// validation split exists.
    pub best_val_params: Option<ModelParams>,
    pub logs: Vec<EpochLog>,
}

pub fn fit(
    kind: ModelKind,
    model_config: ModelConfig,
    train: &[WindowSample],
    val: &[WindowSample],
    test: &[WindowSample],
    cfg: &TrainConfig,
) -> Result<FitResult> {
    fit_with(kind, model_config, train, val, test, cfg, |_| {})
}

/// [`fit`] with a callback after every epoch.
pub fn fit_with(
    kind: ModelKind,
    model_config: ModelConfig,
    train: &[WindowSample],
    val: &[WindowSample],
    test: &[WindowSample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<FitResult> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::contract("training split has no windows"));
    }
    let params = init_params(kind, model_config, cfg.seed)?;
    fit_from(params, train, val, test, cfg, &mut on_epoch)
}

/// Trains starting from the given parameters.
pub fn fit_from(
    mut params: ModelParams,
    train: &[WindowSample],
    val: &[WindowSample],
    test: &[WindowSample],
    cfg: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<FitResult> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::contract("training split has no windows"));
    }
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let mut state = AdamState::new(&params, adam);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut logs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, ModelParams)> = None;

    for epoch in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut weighted = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let batch: Vec<&WindowSample> = idx.iter().map(|&i| &train[i]).collect();
            let loss = accumulate_gradients(&mut params, &batch)?;
            if let Some(max) = cfg.clip_norm {
                clip_grad_norm(&mut params, max);
            }
            adam_step(&mut params, &mut state)?;
            weighted += loss * batch.len() as f64;
        }
        let val_loss = evaluate_loss(&params, val)?;
        let log = EpochLog {
            epoch,
            train_loss: weighted / train.len() as f64,
            val_loss,
            test_loss: evaluate_loss(&params, test)?,
            lambda_emo: params.lambda(),
        };
        if !log.train_loss.is_finite() {
            return Err(Error::contract(format!("training diverged at epoch {epoch}")));
        }
        if let Some(v) = val_loss {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, params.clone()));
            }
        }
        on_epoch(&log);
        logs.push(log);
    }
    Ok(FitResult {
        params,
        best_val_params: best.map(|(_, p)| p),
        logs,
    })
}

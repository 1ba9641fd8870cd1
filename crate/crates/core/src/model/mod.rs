//! Pose-only baseline, gated fusion predictor and autoregressive world model.

mod checkpoint;
mod forward;
mod params;

pub use checkpoint::{Checkpoint, SplitSpec, StoredTensor};
pub use forward::{
    accumulate_gradients, batch_loss, encode_window, fuse, lstm_cell, model_inputs, predict, predict_batch,
    predict_direct, predict_rollout, RecurrentState,
};
pub use params::{
    init_params, DecoderParams, GateParam, LstmLayerParams, ModelConfig, ModelKind, ModelParams, DEFAULT_HIDDEN,
    FORGET_BIAS_INIT, LAMBDA_INIT,
};

#![allow(dead_code)]

use posecast_core::data::{WindowConfig, WindowSample};
use posecast_core::model::{init_params, ModelConfig, ModelKind, ModelParams};
use posecast_core::tensor::Tensor;
use posecast_core::{EMOTION_DIM, POSE_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor {
    Tensor::matrix(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

pub fn random_window(rng: &mut ChaCha8Rng, w: WindowConfig) -> WindowSample {
    WindowSample {
        x_pose: random_matrix(rng, w.obs_len, POSE_DIM, 1.5),
        x_emotion: random_matrix(rng, w.obs_len, EMOTION_DIM, 1.5),
        y_pose: random_matrix(rng, w.horizon, POSE_DIM, 1.5),
    }
}

pub fn random_windows(n: usize, seed: u64, w: WindowConfig) -> Vec<WindowSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_window(&mut rng, w)).collect()
}

pub fn small_config(hidden: usize) -> ModelConfig {
    ModelConfig {
        window: WindowConfig::default(),
        hidden,
    }
}

pub fn small_model(kind: ModelKind, hidden: usize, seed: u64) -> ModelParams {
    init_params(kind, small_config(hidden), seed).unwrap()
}

/// Every weight, bias and the decoder set to zero; λ untouched.
pub fn zero_weights(p: &mut ModelParams) {
    for l in p.layers.iter_mut() {
        l.w_x.value.fill(0.0);
        l.w_h.value.fill(0.0);
        l.b.value.fill(0.0);
    }
    p.decoder.w.value.fill(0.0);
    p.decoder.b.value.fill(0.0);
}

//! MSE objective, Adam, and the epoch loop.

mod adam;
mod fit;
mod log;
mod loss;

pub use adam::{adam_step, clip_grad_norm, AdamConfig, AdamState};
pub use fit::{fit, fit_from, fit_with, EpochLog, FitResult, TrainConfig};
pub use log::{gate_csv, read_metrics, write_metrics};
pub use loss::{evaluate_loss, mse_loss};

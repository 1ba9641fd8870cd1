//! Emotion-conditioned short-horizon pose forecasting.
//!
//! Three predictors share a two-layer LSTM encoder: a pose-only baseline, a
//! fusion predictor that feeds `[pose | λ·emotion]` with a learnable scalar
//! gate `λ`, and a world model that rolls the fused recurrence forward one
//! frame at a time, feeding its own predictions back in. Everything runs on
//! a small `f64` reverse-mode autodiff engine ([`graph`]).

pub mod data;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};

/// 33 joints × 2 image-plane coordinates.
pub const POSE_DIM: usize = 66;
pub const JOINTS: usize = 33;
pub const EMOTION_DIM: usize = 20;

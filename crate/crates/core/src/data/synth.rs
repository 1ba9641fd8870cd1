//! Synthetic pose–emotion tracks with a controllable cross-modal coupling.
//!
//! A latent affect signal `a_t ∈ [0, 1]` follows a clipped random walk,
//! smoothed by a centred moving average. The emotion embedding reads `a_t`
//! out directly (`e[0] = a_t`) and through a fixed random linear map plus
//! noise (`e[1..]`). Every pose coordinate oscillates around a fixed base
//! position as `base + A·sin(θ_t + φ)`, where the shared phase advances by
//! `ω` per frame. In coupled mode `A` and `ω` are driven by `a_t`; in
//! decoupled mode they follow an independent walk `a′_t`, so the emotion
//! channel carries no information about motion.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::frames::{FrameRecord, SequenceDataset};
use crate::error::{Error, Result};
use crate::{EMOTION_DIM, POSE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    Coupled,
    Decoupled,
}

impl std::str::FromStr for SynthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(SynthMode::Coupled),
            "decoupled" => Ok(SynthMode::Decoupled),
            other => Err(Error::contract(format!("unknown synth mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub walk_step: f64,
    /// Pull of the walk towards 0.5 per frame; 0 gives a pure random walk.
    pub mean_reversion: f64,
    pub smooth_window: usize,
    pub emotion_noise: f64,
    pub amplitude_base: f64,
    pub amplitude_gain: f64,
    pub freq_base: f64,
    pub freq_gain: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            walk_step: 0.05,
            mean_reversion: 0.0,
            smooth_window: 5,
            emotion_noise: 0.05,
            amplitude_base: 0.05,
            amplitude_gain: 0.15,
            freq_base: 0.1,
            freq_gain: 0.3,
        }
    }
}

pub fn synth_generate(mode: SynthMode, n_frames: usize, seed: u64) -> Result<SequenceDataset> {
    synth_generate_with(&SynthConfig::default(), mode, n_frames, seed)
}

pub fn synth_generate_with(
    cfg: &SynthConfig,
    mode: SynthMode,
    n_frames: usize,
    seed: u64,
) -> Result<SequenceDataset> {
    if n_frames == 0 {
        return Err(Error::contract("synth_generate needs n_frames >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let base: Vec<f64> = (0..POSE_DIM).map(|_| rng.gen_range(0.3..0.7)).collect();
    let phase: Vec<f64> = (0..POSE_DIM).map(|_| rng.gen_range(0.0..TAU)).collect();
    let readout_w: Vec<f64> = (1..EMOTION_DIM).map(|_| rng.sample(StandardNormal)).collect();
    let readout_b: Vec<f64> = (1..EMOTION_DIM).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();

    let affect = latent_walk(cfg, n_frames, &mut rng);
    let motion_drive = match mode {
        SynthMode::Coupled => affect.clone(),
        SynthMode::Decoupled => latent_walk(cfg, n_frames, &mut rng),
    };

    let mut theta = 0.0f64;
    let mut frames = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let a = affect[t];
        let drive = motion_drive[t];
        let amplitude = cfg.amplitude_base + cfg.amplitude_gain * drive;
        let omega = cfg.freq_base + cfg.freq_gain * drive;

        let pose = base
            .iter()
            .zip(&phase)
            .map(|(b, p)| b + amplitude * (theta + p).sin())
            .collect();
        let mut emotion = Vec::with_capacity(EMOTION_DIM);
        emotion.push(a);
        for (w, b) in readout_w.iter().zip(&readout_b) {
            let noise: f64 = rng.sample(StandardNormal);
            emotion.push(w * a + b + cfg.emotion_noise * noise);
        }
        frames.push(FrameRecord {
            t: t as i64,
            pose,
            emotion,
        });
        theta += omega;
    }
    let id = match mode {
        SynthMode::Coupled => format!("synth-coupled-{seed}"),
        SynthMode::Decoupled => format!("synth-decoupled-{seed}"),
    };
    SequenceDataset::new(id, frames)
}

fn latent_walk(cfg: &SynthConfig, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut raw = Vec::with_capacity(n);
    let mut a = 0.5f64;
    for _ in 0..n {
        raw.push(a);
        let eta: f64 = rng.sample(StandardNormal);
        a = (a + cfg.mean_reversion * (0.5 - a) + cfg.walk_step * eta).clamp(0.0, 1.0);
    }
    moving_average(&raw, cfg.smooth_window)
}

/// Centred moving average, truncated at the sequence ends.
fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return x.to_vec();
    }
    let before = (window - 1) / 2;
    let after = window - 1 - before;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after + 1).min(x.len());
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

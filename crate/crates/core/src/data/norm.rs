use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frames::{FrameRecord, SequenceDataset};
use crate::error::{Error, Result};
use crate::{EMOTION_DIM, POSE_DIM};

pub const DEFAULT_STD_FLOOR: f64 = 1e-6;

/// Per-feature mean/std fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub pose_mean: Vec<f64>,
    pub pose_std: Vec<f64>,
    pub emotion_mean: Vec<f64>,
    pub emotion_std: Vec<f64>,
    pub std_floor: f64,
}

impl NormStats {
    /// Zero mean, unit std: normalization is the identity map.
    pub fn identity() -> Self {
        Self {
            pose_mean: vec![0.0; POSE_DIM],
            pose_std: vec![1.0; POSE_DIM],
            emotion_mean: vec![0.0; EMOTION_DIM],
            emotion_std: vec![1.0; EMOTION_DIM],
            std_floor: DEFAULT_STD_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lens_ok = self.pose_mean.len() == POSE_DIM
            && self.pose_std.len() == POSE_DIM
            && self.emotion_mean.len() == EMOTION_DIM
            && self.emotion_std.len() == EMOTION_DIM;
        if !lens_ok {
            return Err(Error::contract("norm stats must hold 66 pose and 20 emotion entries"));
        }
        let all = self
            .pose_mean
            .iter()
            .chain(&self.pose_std)
            .chain(&self.emotion_mean)
            .chain(&self.emotion_std);
        if !all.clone().all(|v| v.is_finite()) {
            return Err(Error::contract("norm stats contain non-finite values"));
        }
        if self
            .pose_std
            .iter()
            .chain(&self.emotion_std)
            .any(|&s| s < self.std_floor)
        {
            return Err(Error::contract("norm stats std below std_floor"));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let stats: NormStats = serde_json::from_str(&text)?;
        stats.validate()?;
        Ok(stats)
    }

    /// Normalizes a flat sequence of pose frames in place.
    pub fn normalize_pose(&self, values: &mut [f64]) {
        apply(values, &self.pose_mean, &self.pose_std);
    }

    pub fn denormalize_pose(&self, values: &mut [f64]) {
        invert(values, &self.pose_mean, &self.pose_std);
    }
}

fn apply(values: &mut [f64], mean: &[f64], std: &[f64]) {
    for row in values.chunks_exact_mut(mean.len()) {
        for ((v, m), s) in row.iter_mut().zip(mean).zip(std) {
            *v = (*v - m) / s;
        }
    }
}

fn invert(values: &mut [f64], mean: &[f64], std: &[f64]) {
    for row in values.chunks_exact_mut(mean.len()) {
        for ((v, m), s) in row.iter_mut().zip(mean).zip(std) {
            *v = *v * s + m;
        }
    }
}

/// Per-feature mean and population std over every frame of every training
/// sequence, with stds clamped below at the floor.
pub fn compute_norm_stats(train: &[SequenceDataset]) -> Result<NormStats> {
    compute_norm_stats_with_floor(train, DEFAULT_STD_FLOOR)
}

pub fn compute_norm_stats_with_floor(train: &[SequenceDataset], std_floor: f64) -> Result<NormStats> {
    let frames: Vec<&FrameRecord> = train.iter().flat_map(|d| &d.frames).collect();
    if frames.len() < 2 {
        return Err(Error::contract(format!(
            "normalization needs at least 2 training frames, got {}",
            frames.len()
        )));
    }
    let (pose_mean, pose_std) = moments(frames.iter().map(|f| f.pose.as_slice()), POSE_DIM, std_floor);
    let (emotion_mean, emotion_std) =
        moments(frames.iter().map(|f| f.emotion.as_slice()), EMOTION_DIM, std_floor);
    Ok(NormStats {
        pose_mean,
        pose_std,
        emotion_mean,
        emotion_std,
        std_floor,
    })
}

fn moments<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, dim: usize, floor: f64) -> (Vec<f64>, Vec<f64>) {
    let mut n = 0usize;
    let mut mean = vec![0.0; dim];
    for r in rows.clone() {
        n += 1;
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; dim];
    for r in rows {
        for ((acc, v), m) in var.iter_mut().zip(r).zip(&mean) {
            let d = v - m;
            *acc += d * d;
        }
    }
    let std = var.iter().map(|s| (s / n as f64).sqrt().max(floor)).collect();
    (mean, std)
}

pub fn apply_norm(d: &SequenceDataset, s: &NormStats) -> SequenceDataset {
    map_frames(d, |f| {
        apply(&mut f.pose, &s.pose_mean, &s.pose_std);
        apply(&mut f.emotion, &s.emotion_mean, &s.emotion_std);
    })
}

pub fn invert_norm(d: &SequenceDataset, s: &NormStats) -> SequenceDataset {
    map_frames(d, |f| {
        invert(&mut f.pose, &s.pose_mean, &s.pose_std);
        invert(&mut f.emotion, &s.emotion_mean, &s.emotion_std);
    })
}

fn map_frames(d: &SequenceDataset, mut f: impl FnMut(&mut FrameRecord)) -> SequenceDataset {
    let mut out = d.clone();
    out.frames.iter_mut().for_each(&mut f);
    out
}

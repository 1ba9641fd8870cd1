use serde::{Deserialize, Serialize};

use super::frames::SequenceDataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::{EMOTION_DIM, POSE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub obs_len: usize,
    pub horizon: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            obs_len: 10,
            horizon: 15,
        }
    }
}

impl WindowConfig {
    pub fn new(obs_len: usize, horizon: usize) -> Result<Self> {
        let c = Self { obs_len, horizon };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.obs_len == 0 || self.horizon == 0 {
            return Err(Error::contract(format!(
                "obs_len and horizon must be >= 1, got {} and {}",
                self.obs_len, self.horizon
            )));
        }
        Ok(())
    }

    /// Frames spanned by one sample.
    pub fn span(&self) -> usize {
        self.obs_len + self.horizon
    }
}

/// One training pair: `obs_len` observed frames and the next `horizon` poses.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub x_pose: Tensor,
    pub x_emotion: Tensor,
    pub y_pose: Tensor,
}

impl WindowSample {
    pub fn obs_len(&self) -> usize {
        self.x_pose.rows()
    }

    pub fn horizon(&self) -> usize {
        self.y_pose.rows()
    }

    pub fn last_pose(&self) -> &[f64] {
        self.x_pose.row(self.obs_len() - 1)
    }

    pub fn last_emotion(&self) -> &[f64] {
        self.x_emotion.row(self.obs_len() - 1)
    }

    /// Same sample with the observed emotion sequence replaced.
    pub fn with_emotion(&self, x_emotion: Tensor) -> Result<Self> {
        if x_emotion.shape() != self.x_emotion.shape() {
            return Err(Error::shape("with_emotion", self.x_emotion.shape(), x_emotion.shape()));
        }
        Ok(Self {
            x_emotion,
            ..self.clone()
        })
    }
}

/// Number of stride-1 windows in a sequence of `n` frames.
pub fn window_count(n: usize, c: &WindowConfig) -> usize {
    (n + 1).saturating_sub(c.span())
}

/// Slides a window of `obs_len + horizon` frames over the sequence with
/// stride 1. Sequences shorter than one span yield nothing.
pub fn make_windows(d: &SequenceDataset, c: &WindowConfig) -> Vec<WindowSample> {
    let n = window_count(d.len(), c);
    (0..n)
        .map(|i| {
            let obs = &d.frames[i..i + c.obs_len];
            let fut = &d.frames[i + c.obs_len..i + c.span()];
            WindowSample {
                x_pose: Tensor::matrix(c.obs_len, POSE_DIM, obs.iter().flat_map(|f| f.pose.iter().copied()).collect())
                    .expect("validated frame widths"),
                x_emotion: Tensor::matrix(
                    c.obs_len,
                    EMOTION_DIM,
                    obs.iter().flat_map(|f| f.emotion.iter().copied()).collect(),
                )
                .expect("validated frame widths"),
                y_pose: Tensor::matrix(c.horizon, POSE_DIM, fut.iter().flat_map(|f| f.pose.iter().copied()).collect())
                    .expect("validated frame widths"),
            }
        })
        .collect()
}

pub fn make_windows_all(ds: &[SequenceDataset], c: &WindowConfig) -> Vec<WindowSample> {
    ds.iter().flat_map(|d| make_windows(d, c)).collect()
}

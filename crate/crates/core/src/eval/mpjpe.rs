use serde::{Deserialize, Serialize};

use crate::data::{NormStats, WindowSample};
use crate::error::{Error, Result};
use crate::model::{predict_batch, ModelParams};
use crate::tensor::Tensor;
use crate::train::mse_loss;
use crate::{JOINTS, POSE_DIM};

/// Mean per-joint position error in original coordinates.
///
/// Both inputs are `horizon × 66` in normalized space; they are mapped back
/// through `stats`, read as `horizon × 33 × (x, y)`, and the Euclidean
/// distance is averaged over every (frame, joint) pair.
pub fn mpjpe(pred: &Tensor, target: &Tensor, stats: &NormStats) -> Result<f64> {
    if pred.shape() != target.shape() || pred.cols() != POSE_DIM {
        return Err(Error::shape("mpjpe", pred.shape(), target.shape()));
    }
    let mut p = pred.values().to_vec();
    let mut t = target.values().to_vec();
    stats.denormalize_pose(&mut p);
    stats.denormalize_pose(&mut t);
    let total: f64 = p
        .chunks_exact(2)
        .zip(t.chunks_exact(2))
        .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
        .sum();
    Ok(total / (pred.rows() * JOINTS) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub windows: usize,
    /// Normalized-space MSE, identical to the training log's loss.
    pub loss: Option<f64>,
    /// Denormalized MPJPE averaged over windows.
    pub mpjpe: Option<f64>,
}

pub fn evaluate(params: &ModelParams, windows: &[WindowSample], stats: &NormStats) -> Result<EvalSummary> {
    if windows.is_empty() {
        return Ok(EvalSummary {
            windows: 0,
            loss: None,
            mpjpe: None,
        });
    }
    let refs: Vec<&WindowSample> = windows.iter().collect();
    let preds = predict_batch(params, &refs)?;
    let (mut loss, mut err) = (0.0, 0.0);
    for (p, w) in preds.iter().zip(windows) {
        loss += mse_loss(p, &w.y_pose)?;
        err += mpjpe(p, &w.y_pose, stats)?;
    }
    let n = windows.len() as f64;
    Ok(EvalSummary {
        windows: windows.len(),
        loss: Some(loss / n),
        mpjpe: Some(err / n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_prediction_is_zero() {
        let a = Tensor::matrix(2, 66, (0..132).map(|v| v as f64 * 0.1).collect()).unwrap();
        assert_eq!(mpjpe(&a, &a, &NormStats::identity()).unwrap(), 0.0);
    }

    #[test]
    fn three_four_five() {
        let a = Tensor::zeros(&[1, 66]);
        let mut b = a.clone();
        b.values_mut()[0] = 3.0;
        b.values_mut()[1] = 4.0;
        let e = mpjpe(&a, &b, &NormStats::identity()).unwrap();
        assert!((e - 5.0 / 33.0).abs() < 1e-15);
        assert!((e - 0.151515).abs() < 1e-6);
    }
}

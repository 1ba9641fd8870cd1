use crate::data::WindowSample;
use crate::error::{Error, Result};
use crate::model::{predict_batch, ModelParams};
use crate::tensor::Tensor;

/// `(1/T)·Σ_t ‖p̂_t − p_t‖²` over `T` frames, squared norm over each row.
pub fn mse_loss(pred: &Tensor, target: &Tensor) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("mse_loss", pred.shape(), target.shape()));
    }
    let frames = pred.rows();
    let total: f64 = pred
        .values()
        .iter()
        .zip(target.values())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(total / frames as f64)
}

/// Mean per-window loss in normalized space; `None` for an empty split.
///
/// Each window's loss depends only on that window, so the result does not
/// depend on how predictions are batched.
pub fn evaluate_loss(params: &ModelParams, windows: &[WindowSample]) -> Result<Option<f64>> {
    if windows.is_empty() {
        return Ok(None);
    }
    let refs: Vec<&WindowSample> = windows.iter().collect();
    let preds = predict_batch(params, &refs)?;
    let mut total = 0.0;
    for (p, w) in preds.iter().zip(windows) {
        total += mse_loss(p, &w.y_pose)?;
    }
    Ok(Some(total / windows.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_is_zero() {
        let a = Tensor::matrix(3, 4, (0..12).map(|v| v as f64).collect()).unwrap();
        assert_eq!(mse_loss(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn single_coordinate_off_by_two() {
        let a = Tensor::zeros(&[1, 66]);
        let mut b = a.clone();
        b.values_mut()[17] = 2.0;
        assert_eq!(mse_loss(&a, &b).unwrap(), 4.0);
    }

    #[test]
    fn shape_mismatch() {
        assert!(mse_loss(&Tensor::zeros(&[2, 66]), &Tensor::zeros(&[3, 66])).is_err());
    }
}

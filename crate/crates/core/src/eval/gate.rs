use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::train::EpochLog;

/// A gate counts as active when `|λ_final|` exceeds this.
pub const ACTIVE_GATE_THRESHOLD: f64 = 0.02;
const TAIL_EPOCHS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub final_lambda: f64,
    pub trajectory: Vec<f64>,
    /// Range of λ over the last five epochs.
    pub tail_min: f64,
    pub tail_max: f64,
    pub active: bool,
}

pub fn gate_report(logs: &[EpochLog]) -> Result<GateReport> {
    if logs.is_empty() {
        return Err(Error::contract("gate report needs at least one epoch"));
    }
    let trajectory = logs
        .iter()
        .map(|l| l.lambda_emo)
        .collect::<Option<Vec<f64>>>()
        .ok_or_else(|| Error::contract("logs carry no emotion gate (baseline model?)"))?;
    let final_lambda = *trajectory.last().expect("non-empty");
    let tail = &trajectory[trajectory.len().saturating_sub(TAIL_EPOCHS)..];
    Ok(GateReport {
        final_lambda,
        tail_min: tail.iter().copied().fold(f64::INFINITY, f64::min),
        tail_max: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        active: final_lambda.abs() > ACTIVE_GATE_THRESHOLD,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logs(lambdas: &[Option<f64>]) -> Vec<EpochLog> {
        lambdas
            .iter()
            .enumerate()
            .map(|(epoch, &lambda_emo)| EpochLog {
                epoch,
                train_loss: 1.0,
                val_loss: None,
                test_loss: None,
                lambda_emo,
            })
            .collect()
    }

    #[test]
    fn constant_trajectory() {
        let r = gate_report(&logs(&[Some(0.1152); 20])).unwrap();
        assert_eq!(r.final_lambda, 0.1152);
        assert_eq!((r.tail_min, r.tail_max), (0.1152, 0.1152));
        assert!(r.active);
    }

    #[test]
    fn zero_trajectory_is_inactive() {
        assert!(!gate_report(&logs(&[Some(0.0); 20])).unwrap().active);
    }

    #[test]
    fn decaying_trajectory() {
        let l: Vec<Option<f64>> = (0..20).map(|i| Some(0.10 - 0.002 * i as f64 / 19.0)).collect();
        let r = gate_report(&logs(&l)).unwrap();
        assert!((r.final_lambda - 0.098).abs() < 1e-12);
        assert!(r.active);
        assert_eq!(r.trajectory.len(), 20);
    }

    #[test]
    fn baseline_logs_rejected() {
        assert!(gate_report(&logs(&[None; 3])).is_err());
        assert!(gate_report(&[]).is_err());
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::WindowSample;
use crate::error::{Error, Result};
use crate::model::{predict_batch, ModelKind, ModelParams};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            trials: 20,
            seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::contract(format!("sigma must be finite and >= 0, got {}", self.sigma)));
        }
        if self.trials == 0 {
            return Err(Error::contract("trials must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityResult {
    pub model_kind: ModelKind,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub mean_delta: f64,
    /// Population std over trials.
    pub std_delta: f64,
    pub per_trial: Vec<f64>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Seed for window `index` of a sweep; window 0 uses the base seed itself.
pub fn window_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Adds `ε ~ N(0, σ²)` to every observed emotion coordinate and measures the
/// Frobenius norm of the resulting change in the model's prediction, once
/// per trial.
pub fn counterfactual_delta(
    params: &ModelParams,
    sample: &WindowSample,
    cfg: &PerturbationConfig,
) -> Result<SensitivityResult> {
    cfg.validate()?;
    if !params.kind.uses_emotion() {
        return Err(Error::contract("baseline model has no emotion pathway to perturb"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut batch = Vec::with_capacity(cfg.trials + 1);
    batch.push(sample.clone());
    for _ in 0..cfg.trials {
        let noisy: Vec<f64> = sample
            .x_emotion
            .values()
            .iter()
            .map(|e| {
                let z: f64 = StandardNormal.sample(&mut rng);
                e + cfg.sigma * z
            })
            .collect();
        let e = Tensor::new(sample.x_emotion.shape().to_vec(), noisy)?;
        batch.push(sample.with_emotion(e)?);
    }
    let refs: Vec<&WindowSample> = batch.iter().collect();
    let preds = predict_batch(params, &refs)?;
    let clean = preds[0].values();
    let per_trial: Vec<f64> = preds[1..]
        .iter()
        .map(|p| {
            p.values()
                .iter()
                .zip(clean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let (mean_delta, std_delta) = mean_std(&per_trial);
    Ok(SensitivityResult {
        model_kind: params.kind,
        sigma: cfg.sigma,
        trials: cfg.trials,
        seed: cfg.seed,
        mean_delta,
        std_delta,
        per_trial,
    })
}

/// Average sensitivity over `windows` for each noise level. Trial `k` of the
/// result is the mean over windows of each window's trial `k`; window `i`
/// draws its noise from [`window_seed`]`(cfg.seed, i)`, so the same draws
/// are reused across noise levels.
pub fn sensitivity_sweep(
    params: &ModelParams,
    windows: &[WindowSample],
    sigmas: &[f64],
    cfg: &PerturbationConfig,
) -> Result<Vec<SensitivityResult>> {
    if windows.is_empty() || sigmas.is_empty() {
        return Err(Error::contract("sensitivity sweep needs windows and noise levels"));
    }
    sigmas
        .iter()
        .map(|&sigma| {
            let mut sums = vec![0.0; cfg.trials];
            for (i, w) in windows.iter().enumerate() {
                let c = PerturbationConfig {
                    sigma,
                    seed: window_seed(cfg.seed, i),
                    ..*cfg
                };
                let r = counterfactual_delta(params, w, &c)?;
                for (s, d) in sums.iter_mut().zip(&r.per_trial) {
                    *s += d;
                }
            }
            let per_trial: Vec<f64> = sums.iter().map(|s| s / windows.len() as f64).collect();
            let (mean_delta, std_delta) = mean_std(&per_trial);
            Ok(SensitivityResult {
                model_kind: params.kind,
                sigma,
                trials: cfg.trials,
                seed: cfg.seed,
                mean_delta,
                std_delta,
                per_trial,
            })
        })
        .collect()
}

/// `sigma,mean_delta,std_delta` rows.
pub fn sensitivity_csv(results: &[SensitivityResult]) -> String {
    let mut s = String::from("sigma,mean_delta,std_delta\n");
    for r in results {
        s.push_str(&format!("{},{},{}\n", r.sigma, r.mean_delta, r.std_delta));
    }
    s
}

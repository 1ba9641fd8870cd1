use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ParamSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates, one buffer per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new<P: ParamSet + ?Sized>(params: &P, config: AdamConfig) -> Self {
        let sizes: Vec<usize> = params.params().iter().map(|p| p.len()).collect();
        Self {
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
            config,
        }
    }
}

/// One bias-corrected Adam update from the accumulated grads, which are then
/// cleared. Nothing is modified if any gradient is non-finite.
pub fn adam_step<P: ParamSet + ?Sized>(params: &mut P, state: &mut AdamState) -> Result<()> {
    let mut ps = params.params_mut();
    if ps.len() != state.m.len() {
        return Err(Error::contract("optimizer state does not match parameter set"));
    }
    for p in &ps {
        if !p.grad.all_finite() {
            return Err(Error::NonFiniteGradient(p.name.clone()));
        }
    }
    state.t += 1;
    let AdamConfig { lr, beta1, beta2, eps } = state.config;
    let c1 = 1.0 - beta1.powf(state.t as f64);
    let c2 = 1.0 - beta2.powf(state.t as f64);
    for ((p, m), v) in ps.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        let grads = p.grad.values().to_vec();
        for (((theta, g), m), v) in p.value.values_mut().iter_mut().zip(&grads).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        p.zero_grad();
    }
    Ok(())
}

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<P: ParamSet + ?Sized>(params: &mut P, max_norm: f64) -> f64 {
    let mut ps = params.params_mut();
    let norm = ps
        .iter()
        .flat_map(|p| p.grad.values())
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for p in ps.iter_mut() {
            p.grad.values_mut().iter_mut().for_each(|g| *g *= s);
        }
    }
    norm
}

//! Forward passes for the three predictors, recorded on a [`Graph`] so the
//! same code serves inference and training.
//!
//! Batches are laid out one sample per row. The direct predictors encode the
//! observation window and decode all `horizon × 66` values at once. The world
//! model decodes one frame per step and feeds it back as the next input,
//! holding the last observed emotion fixed.

use crate::data::WindowSample;
use crate::error::{Error, Result};
use crate::graph::{Graph, ParamSet, Parameter, Var};
use crate::tensor::Tensor;
use crate::{EMOTION_DIM, POSE_DIM};

use super::params::{LstmLayerParams, ModelKind, ModelParams};

/// Rows per graph when predicting many windows, to bound graph memory.
const PREDICT_CHUNK: usize = 64;

/// Per-layer `(h, c)` after encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentState {
    pub h: [Vec<f64>; 2],
    pub c: [Vec<f64>; 2],
}

/// `[pose | λ·emotion]`
pub fn fuse(pose: &[f64], emotion: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if pose.len() != POSE_DIM || emotion.len() != EMOTION_DIM {
        return Err(Error::shape("fuse", &[pose.len()], &[emotion.len()]));
    }
    let mut out = Vec::with_capacity(POSE_DIM + EMOTION_DIM);
    out.extend_from_slice(pose);
    out.extend(emotion.iter().map(|e| lambda * e));
    Ok(out)
}

struct LayerVars {
    w_x: Var,
    w_h: Var,
    b: Var,
    hidden: usize,
}

struct Bound {
    layers: [LayerVars; 2],
    lambda: Option<Var>,
    dec_w: Var,
    dec_b: Var,
}

type StackState = [(Var, Var); 2];

/// Registers the model's parameters in `ParamSet` order.
fn bind(g: &mut Graph, p: &ModelParams, trainable: bool) -> Bound {
    let mut slot = 0;
    let mut reg = |g: &mut Graph, param: &Parameter| {
        let v = if trainable {
            g.param(slot, param)
        } else {
            g.input(param.value.clone())
        };
        slot += 1;
        v
    };
    let mut layer = |g: &mut Graph, l: &LstmLayerParams| LayerVars {
        w_x: reg(g, &l.w_x),
        w_h: reg(g, &l.w_h),
        b: reg(g, &l.b),
        hidden: l.hidden_size(),
    };
    let l0 = layer(g, &p.layers[0]);
    let l1 = layer(g, &p.layers[1]);
    let dec_w = reg(g, &p.decoder.w);
    let dec_b = reg(g, &p.decoder.b);
    let lambda = p.gate.as_ref().map(|gate| reg(g, &gate.lambda_emo));
    Bound {
        layers: [l0, l1],
        lambda,
        dec_w,
        dec_b,
    }
}

fn cell(g: &mut Graph, x: Var, prev: Option<(Var, Var)>, l: &LayerVars) -> Result<(Var, Var)> {
    let h = l.hidden;
    let mut gates = g.matmul_t(x, l.w_x)?;
    if let Some((hp, _)) = prev {
        let rec = g.matmul_t(hp, l.w_h)?;
        gates = g.add(gates, rec)?;
    }
    let gates = g.add_bias(gates, l.b)?;
    let i = g.slice_cols(gates, 0, h)?;
    let i = g.sigmoid(i);
    let f = g.slice_cols(gates, h, h)?;
    let f = g.sigmoid(f);
    let cand = g.slice_cols(gates, 2 * h, h)?;
    let cand = g.tanh(cand);
    let o = g.slice_cols(gates, 3 * h, h)?;
    let o = g.sigmoid(o);

    let mut c = g.mul(i, cand)?;
    if let Some((_, cp)) = prev {
        let keep = g.mul(f, cp)?;
        c = g.add(keep, c)?;
    }
    let tc = g.tanh(c);
    let h_new = g.mul(o, tc)?;
    Ok((h_new, c))
}

/// One step through both layers. `None` is the zero initial state.
fn stack_step(g: &mut Graph, x: Var, state: Option<StackState>, b: &Bound) -> Result<StackState> {
    let s0 = cell(g, x, state.map(|s| s[0]), &b.layers[0])?;
    let s1 = cell(g, s0.0, state.map(|s| s[1]), &b.layers[1])?;
    Ok([s0, s1])
}

fn encode(g: &mut Graph, inputs: &[Var], b: &Bound) -> Result<StackState> {
    let mut state = None;
    for &x in inputs {
        state = Some(stack_step(g, x, state, b)?);
    }
    state.ok_or_else(|| Error::contract("observation window must hold at least one frame"))
}

fn decode(g: &mut Graph, h: Var, b: &Bound) -> Result<Var> {
    let y = g.matmul_t(h, b.dec_w)?;
    g.add_bias(y, b.dec_b)
}

fn gather_rows(samples: &[&WindowSample], pick: impl Fn(&WindowSample) -> &[f64]) -> Result<Tensor> {
    let width = pick(samples[0]).len();
    let mut v = Vec::with_capacity(samples.len() * width);
    for s in samples {
        let row = pick(s);
        if row.len() != width {
            return Err(Error::shape("batch", &[width], &[row.len()]));
        }
        v.extend_from_slice(row);
    }
    Tensor::matrix(samples.len(), width, v)
}

enum Output {
    /// `B × (horizon·66)`
    Direct(Var),
    /// One `B × 66` node per rollout step.
    Steps(Vec<Var>),
}

fn check_batch(p: &ModelParams, samples: &[&WindowSample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    let w = p.config.window;
    for s in samples {
        let ok = s.x_pose.shape() == [w.obs_len, POSE_DIM]
            && s.x_emotion.shape() == [w.obs_len, EMOTION_DIM]
            && s.y_pose.shape() == [w.horizon, POSE_DIM];
        if !ok {
            return Err(Error::shape(
                "window sample",
                s.x_pose.shape(),
                &[w.obs_len, POSE_DIM, w.horizon],
            ));
        }
    }
    Ok(())
}

fn forward(g: &mut Graph, b: &Bound, p: &ModelParams, samples: &[&WindowSample]) -> Result<Output> {
    check_batch(p, samples)?;
    let w = p.config.window;
    let mut inputs = Vec::with_capacity(w.obs_len);
    for t in 0..w.obs_len {
        let pose = g.input(gather_rows(samples, |s| s.x_pose.row(t))?);
        let x = match b.lambda {
            None => pose,
            Some(lambda) => {
                let emo = g.input(gather_rows(samples, |s| s.x_emotion.row(t))?);
                let gated = g.scale_by(emo, lambda)?;
                g.concat_cols(pose, gated)?
            }
        };
        inputs.push(x);
    }
    let state = encode(g, &inputs, b)?;

    match p.kind {
        ModelKind::Baseline | ModelKind::Fusion => Ok(Output::Direct(decode(g, state[1].0, b)?)),
        ModelKind::World => {
            let lambda = b.lambda.ok_or_else(|| Error::contract("world model requires a gate"))?;
            let e_last = g.input(gather_rows(samples, |s| s.last_emotion())?);
            let gated = g.scale_by(e_last, lambda)?;
            let mut pose = g.input(gather_rows(samples, |s| s.last_pose())?);
            let mut state = state;
            let mut steps = Vec::with_capacity(w.horizon);
            for _ in 0..w.horizon {
                let x = g.concat_cols(pose, gated)?;
                state = stack_step(g, x, Some(state), b)?;
                pose = decode(g, state[1].0, b)?;
                steps.push(pose);
            }
            Ok(Output::Steps(steps))
        }
    }
}

fn split_predictions(g: &Graph, out: &Output, n: usize, horizon: usize) -> Vec<Tensor> {
    (0..n)
        .map(|i| {
            let values = match out {
                Output::Direct(v) => g.value(*v).row(i).to_vec(),
                Output::Steps(steps) => steps.iter().flat_map(|s| g.value(*s).row(i).iter().copied()).collect(),
            };
            Tensor::matrix(horizon, POSE_DIM, values).expect("decoder width checked by validate")
        })
        .collect()
}

/// Predictions for many windows with the model's native predictor.
pub fn predict_batch(p: &ModelParams, samples: &[&WindowSample]) -> Result<Vec<Tensor>> {
    p.validate()?;
    let mut preds = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(PREDICT_CHUNK) {
        let mut g = Graph::new();
        let b = bind(&mut g, p, false);
        let out = forward(&mut g, &b, p, chunk)?;
        preds.extend(split_predictions(&g, &out, chunk.len(), p.config.window.horizon));
    }
    Ok(preds)
}

/// `horizon × 66` prediction for one window.
pub fn predict(p: &ModelParams, sample: &WindowSample) -> Result<Tensor> {
    Ok(predict_batch(p, &[sample])?.remove(0))
}

/// Encodes the window and decodes every future frame in one affine map.
pub fn predict_direct(p: &ModelParams, sample: &WindowSample) -> Result<Tensor> {
    if p.kind.is_rollout() {
        return Err(Error::contract("predict_direct needs a baseline or fusion model"));
    }
    predict(p, sample)
}

/// Autoregressive rollout of the world model.
pub fn predict_rollout(p: &ModelParams, sample: &WindowSample) -> Result<Tensor> {
    if !p.kind.is_rollout() {
        return Err(Error::contract("predict_rollout needs a world model"));
    }
    predict(p, sample)
}

/// Mean over the batch of `(1/T)·Σ_t ‖p̂_t − p_t‖²`, with gradients added to
/// `p`'s parameter grads.
pub fn accumulate_gradients(p: &mut ModelParams, samples: &[&WindowSample]) -> Result<f64> {
    let mut g = Graph::new();
    let b = bind(&mut g, p, true);
    let out = forward(&mut g, &b, p, samples)?;
    let horizon = p.config.window.horizon;
    let total = match out {
        Output::Direct(pred) => {
            let target = g.input(gather_rows(samples, |s| s.y_pose.values())?);
            squared_error(&mut g, pred, target)?
        }
        Output::Steps(steps) => {
            let mut acc: Option<Var> = None;
            for (t, pred) in steps.into_iter().enumerate() {
                let target = g.input(gather_rows(samples, |s| s.y_pose.row(t))?);
                let se = squared_error(&mut g, pred, target)?;
                acc = Some(match acc {
                    Some(a) => g.add(a, se)?,
                    None => se,
                });
            }
            acc.expect("horizon >= 1")
        }
    };
    let loss = g.scale(total, 1.0 / (samples.len() * horizon) as f64);
    let value = g.value(loss).values()[0];
    g.backward(loss, &mut p.params_mut())?;
    Ok(value)
}

fn squared_error(g: &mut Graph, pred: Var, target: Var) -> Result<Var> {
    let d = g.sub(pred, target)?;
    let sq = g.mul(d, d)?;
    Ok(g.sum(sq))
}

/// Batch loss without touching gradients.
pub fn batch_loss(p: &ModelParams, samples: &[&WindowSample]) -> Result<f64> {
    let mut scratch = p.clone();
    accumulate_gradients(&mut scratch, samples)
}

/// One LSTM step for a single input vector and explicit `(h, c)`.
pub fn lstm_cell(x: &[f64], h: &[f64], c: &[f64], layer: &LstmLayerParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let hidden = layer.hidden_size();
    if x.len() != layer.input_size() || h.len() != hidden || c.len() != hidden {
        return Err(Error::shape("lstm_cell", &[x.len(), h.len(), c.len()], &[layer.input_size(), hidden]));
    }
    let mut g = Graph::new();
    let lv = LayerVars {
        w_x: g.input(layer.w_x.value.clone()),
        w_h: g.input(layer.w_h.value.clone()),
        b: g.input(layer.b.value.clone()),
        hidden,
    };
    let xv = g.input(Tensor::matrix(1, x.len(), x.to_vec())?);
    let hv = g.input(Tensor::matrix(1, hidden, h.to_vec())?);
    let cv = g.input(Tensor::matrix(1, hidden, c.to_vec())?);
    let (h2, c2) = cell(&mut g, xv, Some((hv, cv)), &lv)?;
    Ok((g.value(h2).values().to_vec(), g.value(c2).values().to_vec()))
}

/// Runs both layers over already-fused input frames (`obs_len × d`) from the
/// zero state.
pub fn encode_window(x: &Tensor, p: &ModelParams) -> Result<RecurrentState> {
    let d = p.layers[0].input_size();
    if x.cols() != d || x.shape().len() != 2 {
        return Err(Error::shape("encode_window", x.shape(), &[x.rows(), d]));
    }
    let mut g = Graph::new();
    let b = bind(&mut g, p, false);
    let inputs: Vec<Var> = (0..x.rows())
        .map(|t| g.input(Tensor::matrix(1, d, x.row(t).to_vec()).expect("row width")))
        .collect();
    let s = encode(&mut g, &inputs, &b)?;
    let get = |v: Var| g.value(v).values().to_vec();
    Ok(RecurrentState {
        h: [get(s[0].0), get(s[1].0)],
        c: [get(s[0].1), get(s[1].1)],
    })
}

/// The observation window as the first layer sees it: raw poses for the
/// baseline, `[pose | λ·emotion]` rows otherwise.
pub fn model_inputs(p: &ModelParams, sample: &WindowSample) -> Result<Tensor> {
    let n = sample.obs_len();
    match p.lambda() {
        None => Ok(sample.x_pose.clone()),
        Some(lambda) => {
            let mut rows = Vec::with_capacity(n);
            for t in 0..n {
                rows.push(fuse(sample.x_pose.row(t), sample.x_emotion.row(t), lambda)?);
            }
            Tensor::from_rows(&rows)
        }
    }
}

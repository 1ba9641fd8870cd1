use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::WindowConfig;
use crate::error::{Error, Result};
use crate::graph::{ParamSet, Parameter};
use crate::tensor::Tensor;
use crate::{EMOTION_DIM, POSE_DIM};

pub const DEFAULT_HIDDEN: usize = 128;
pub const LAMBDA_INIT: f64 = 0.1;
pub const FORGET_BIAS_INIT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Baseline,
    Fusion,
    World,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Baseline, ModelKind::Fusion, ModelKind::World];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Baseline => "baseline",
            ModelKind::Fusion => "fusion",
            ModelKind::World => "world",
        }
    }

    pub fn uses_emotion(self) -> bool {
        !matches!(self, ModelKind::Baseline)
    }

    pub fn is_rollout(self) -> bool {
        matches!(self, ModelKind::World)
    }

    /// Width of the first LSTM layer's input.
    pub fn input_dim(self) -> usize {
        if self.uses_emotion() {
            POSE_DIM + EMOTION_DIM
        } else {
            POSE_DIM
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ModelKind::Baseline),
            "fusion" => Ok(ModelKind::Fusion),
            "world" => Ok(ModelKind::World),
            other => Err(Error::contract(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub window: WindowConfig,
    pub hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            hidden: DEFAULT_HIDDEN,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.hidden == 0 {
            return Err(Error::contract("hidden size must be >= 1"));
        }
        Ok(())
    }

    /// Decoder width: the whole horizon for direct predictors, one frame for
    /// the rollout model.
    pub fn decoder_out(&self, kind: ModelKind) -> usize {
        if kind.is_rollout() {
            POSE_DIM
        } else {
            self.window.horizon * POSE_DIM
        }
    }
}

/// Gate order along the `4h` axis: input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    /// `4h × d`
    pub w_x: Parameter,
    /// `4h × h`
    pub w_h: Parameter,
    /// `4h`
    pub b: Parameter,
}

impl LstmLayerParams {
    pub fn input_size(&self) -> usize {
        self.w_x.value.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_h.value.cols()
    }

    fn init(prefix: &str, d: usize, h: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (h as f64).sqrt();
        let w_x = uniform(rng, 4 * h * d, bound);
        let w_h = uniform(rng, 4 * h * h, bound);
        let mut b = vec![0.0; 4 * h];
        b[h..2 * h].iter_mut().for_each(|v| *v = FORGET_BIAS_INIT);
        Self {
            w_x: Parameter::new(format!("{prefix}.w_x"), Tensor::matrix(4 * h, d, w_x).expect("sized")),
            w_h: Parameter::new(format!("{prefix}.w_h"), Tensor::matrix(4 * h, h, w_h).expect("sized")),
            b: Parameter::new(format!("{prefix}.b"), Tensor::new(vec![4 * h], b).expect("sized")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateParam {
    pub lambda_emo: Parameter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    /// `out × h`
    pub w: Parameter,
    pub b: Parameter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub config: ModelConfig,
    pub layers: [LstmLayerParams; 2],
    pub gate: Option<GateParam>,
    pub decoder: DecoderParams,
}

impl ModelParams {
    pub fn lambda(&self) -> Option<f64> {
        self.gate.as_ref().map(|g| g.lambda_emo.value.values()[0])
    }

    pub fn set_lambda(&mut self, value: f64) -> Result<()> {
        match &mut self.gate {
            Some(g) => {
                g.lambda_emo.value.values_mut()[0] = value;
                Ok(())
            }
            None => Err(Error::contract("baseline model has no emotion gate")),
        }
    }

    pub fn hidden(&self) -> usize {
        self.config.hidden
    }

    pub fn window(&self) -> WindowConfig {
        self.config.window
    }

    /// Checks that every tensor has the shape implied by kind and config.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let h = self.config.hidden;
        let mut expected = vec![
            vec![4 * h, self.kind.input_dim()],
            vec![4 * h, h],
            vec![4 * h],
            vec![4 * h, h],
            vec![4 * h, h],
            vec![4 * h],
            vec![self.config.decoder_out(self.kind), h],
            vec![self.config.decoder_out(self.kind)],
        ];
        if self.kind.uses_emotion() {
            expected.push(vec![1]);
        }
        let params = self.params();
        if params.len() != expected.len() {
            return Err(Error::contract(format!(
                "{} model: gate {} but kind {}",
                self.kind,
                if self.gate.is_some() { "present" } else { "absent" },
                if self.kind.uses_emotion() { "requires one" } else { "forbids one" }
            )));
        }
        for (p, shape) in params.iter().zip(&expected) {
            if p.value.shape() != shape.as_slice() {
                return Err(Error::shape("model parameter", p.value.shape(), shape));
            }
        }
        Ok(())
    }
}

impl ParamSet for ModelParams {
    fn params(&self) -> Vec<&Parameter> {
        let [l0, l1] = &self.layers;
        let mut v = vec![&l0.w_x, &l0.w_h, &l0.b, &l1.w_x, &l1.w_h, &l1.b, &self.decoder.w, &self.decoder.b];
        if let Some(g) = &self.gate {
            v.push(&g.lambda_emo);
        }
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let [l0, l1] = &mut self.layers;
        let mut v = vec![
            &mut l0.w_x,
            &mut l0.w_h,
            &mut l0.b,
            &mut l1.w_x,
            &mut l1.w_h,
            &mut l1.b,
            &mut self.decoder.w,
            &mut self.decoder.b,
        ];
        if let Some(g) = &mut self.gate {
            v.push(&mut g.lambda_emo);
        }
        v
    }
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
}

/// Fresh parameters: every weight `~ U(−1/√h, 1/√h)`, biases zero except the
/// forget gate (1.0), and `λ = 0.1` for gated kinds.
pub fn init_params(kind: ModelKind, config: ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    let h = config.hidden;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = LstmLayerParams::init("layer0", kind.input_dim(), h, &mut rng);
    let l1 = LstmLayerParams::init("layer1", h, h, &mut rng);
    let out = config.decoder_out(kind);
    let bound = 1.0 / (h as f64).sqrt();
    let decoder = DecoderParams {
        w: Parameter::new("decoder.w", Tensor::matrix(out, h, uniform(&mut rng, out * h, bound))?),
        b: Parameter::new("decoder.b", Tensor::zeros(&[out])),
    };
    let gate = kind.uses_emotion().then(|| GateParam {
        lambda_emo: Parameter::new("gate.lambda_emo", Tensor::scalar(LAMBDA_INIT)),
    });
    Ok(ModelParams {
        kind,
        config,
        layers: [l0, l1],
        gate,
        decoder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_params() {
        let c = ModelConfig::default();
        let a = init_params(ModelKind::Fusion, c, 5).unwrap();
        let b = init_params(ModelKind::Fusion, c, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_params(ModelKind::Fusion, c, 6).unwrap());
    }

    #[test]
    fn gate_presence_and_init() {
        let c = ModelConfig::default();
        assert!(init_params(ModelKind::Baseline, c, 0).unwrap().gate.is_none());
        for kind in [ModelKind::Fusion, ModelKind::World] {
            assert_eq!(init_params(kind, c, 0).unwrap().lambda(), Some(0.1));
        }
    }

    #[test]
    fn shapes_follow_kind() {
        let c = ModelConfig::default();
        for kind in ModelKind::ALL {
            let p = init_params(kind, c, 1).unwrap();
            p.validate().unwrap();
            assert_eq!(p.layers[0].input_size(), if kind == ModelKind::Baseline { 66 } else { 86 });
            assert_eq!(p.layers[1].input_size(), 128);
            let out = if kind == ModelKind::World { 66 } else { 990 };
            assert_eq!(p.decoder.w.value.shape(), &[out, 128]);
        }
    }

    #[test]
    fn init_range_and_biases() {
        let p = init_params(ModelKind::World, ModelConfig::default(), 2).unwrap();
        let bound = 1.0 / 128f64.sqrt();
        assert!((bound - 0.0884).abs() < 1e-4);
        for t in [&p.layers[1].w_x, &p.layers[1].w_h] {
            assert!(t.value.values().iter().all(|v| v.abs() <= bound));
        }
        let b = p.layers[0].b.value.values();
        assert!(b[..128].iter().all(|&v| v == 0.0));
        assert!(b[128..256].iter().all(|&v| v == 1.0));
        assert!(b[256..].iter().all(|&v| v == 0.0));
    }
}

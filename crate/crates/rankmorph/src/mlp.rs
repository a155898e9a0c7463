//! The 3-64-1 multilayer perceptron used as a learned reduced mapping.
//!
//! One hidden layer of 64 ReLU units and a single linear output neuron
//! without bias. The score of an RGB color is `w2 . relu(W1 x + b1)`.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sco::SoftConfig;

pub const INPUT_DIM: usize = 3;
pub const HIDDEN_DIM: usize = 64;

/// Weights of the 3-64-1 regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// Hidden weights, row-major `HIDDEN_DIM x INPUT_DIM`.
    pub w1: Vec<f64>,
    /// Hidden biases, length `HIDDEN_DIM`.
    pub b1: Vec<f64>,
    /// Output weights, length `HIDDEN_DIM`. The output neuron has no bias.
    pub w2: Vec<f64>,
}

impl MlpParams {
    pub fn zeros() -> Self {
        Self {
            w1: vec![0.0; HIDDEN_DIM * INPUT_DIM],
            b1: vec![0.0; HIDDEN_DIM],
            w2: vec![0.0; HIDDEN_DIM],
        }
    }

    /// Glorot-uniform initialization: weights uniform in `[-l, l]` with
    /// `l = sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn glorot<R: Rng>(rng: &mut R) -> Self {
        let mut params = Self::zeros();
        let l1 = (6.0 / (INPUT_DIM + HIDDEN_DIM) as f64).sqrt();
        for w in params.w1.iter_mut() {
            *w = rng.random_range(-l1..l1);
        }
        let l2 = (6.0 / (HIDDEN_DIM + 1) as f64).sqrt();
        for w in params.w2.iter_mut() {
            *w = rng.random_range(-l2..l2);
        }
        params
    }

    fn check_shapes(&self) -> Result<()> {
        if self.w1.len() != HIDDEN_DIM * INPUT_DIM
            || self.b1.len() != HIDDEN_DIM
            || self.w2.len() != HIDDEN_DIM
        {
            return Err(Error::InvalidValue(format!(
                "weight shapes do not match a {INPUT_DIM}-{HIDDEN_DIM}-1 network"
            )));
        }
        if self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidValue("non-finite network weight".into()));
        }
        Ok(())
    }

    /// Score of a 3-channel color.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != INPUT_DIM {
            return Err(Error::Dimension {
                expected: INPUT_DIM,
                got: x.len(),
            });
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let mut out = 0.0;
        for j in 0..HIDDEN_DIM {
            let row = &self.w1[j * INPUT_DIM..(j + 1) * INPUT_DIM];
            let z = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + self.b1[j];
            if z > 0.0 {
                out += self.w2[j] * z;
            }
        }
        out
    }

    /// Forward pass that also writes the post-ReLU hidden activations into `hidden`.
    pub(crate) fn forward_with_hidden(&self, x: &[f64], hidden: &mut [f64]) -> f64 {
        let mut out = 0.0;
        for j in 0..HIDDEN_DIM {
            let row = &self.w1[j * INPUT_DIM..(j + 1) * INPUT_DIM];
            let z = row[0] * x[0] + row[1] * x[1] + row[2] * x[2] + self.b1[j];
            let a = if z > 0.0 { z } else { 0.0 };
            hidden[j] = a;
            out += self.w2[j] * a;
        }
        out
    }
}

/// Gradient (or any other per-parameter tensor) with the same shape as [`MlpParams`].
#[derive(Debug, Clone)]
pub struct MlpGrad {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl MlpGrad {
    pub fn zeros() -> Self {
        Self {
            w1: vec![0.0; HIDDEN_DIM * INPUT_DIM],
            b1: vec![0.0; HIDDEN_DIM],
            w2: vec![0.0; HIDDEN_DIM],
        }
    }

}

/// Adam optimizer state over the network parameters.
#[derive(Debug, Clone)]
pub(crate) struct Adam {
    m: MlpGrad,
    v: MlpGrad,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
}

impl Adam {
    pub fn new(cfg: &SoftConfig) -> Self {
        Self {
            m: MlpGrad::zeros(),
            v: MlpGrad::zeros(),
            t: 0,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            epsilon: cfg.epsilon,
        }
    }

    pub fn step(&mut self, params: &mut MlpParams, grad: &MlpGrad) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        };
        update(&mut params.w1, &grad.w1, &mut self.m.w1, &mut self.v.w1);
        update(&mut params.b1, &grad.b1, &mut self.m.b1, &mut self.v.b1);
        update(&mut params.w2, &grad.w2, &mut self.m.w2, &mut self.v.w2);
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk model file: architecture descriptor, weights, and the training
/// configuration that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub architecture: Vec<usize>,
    pub params: MlpParams,
    pub training: SoftConfig,
}

impl ModelFile {
    pub fn new(params: MlpParams, training: SoftConfig) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            architecture: vec![INPUT_DIM, HIDDEN_DIM, 1],
            params,
            training,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidValue(format!("model serialization failed: {e}")))?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.display().to_string(),
            offset: e.column() as u64,
            message: format!("invalid model JSON: {e}"),
        })?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format {
                path: path.display().to_string(),
                offset: 0,
                message: format!("unsupported model format version {}", file.format_version),
            });
        }
        if file.architecture != [INPUT_DIM, HIDDEN_DIM, 1] {
            return Err(Error::Format {
                path: path.display().to_string(),
                offset: 0,
                message: format!("unsupported architecture {:?}", file.architecture),
            });
        }
        file.params.check_shapes().map_err(|e| Error::Format {
            path: path.display().to_string(),
            offset: 0,
            message: e.to_string(),
        })?;
        Ok(file)
    }
}

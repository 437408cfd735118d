use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{InputLayout, ModelConfig};
use crate::error::{CoreError, Result};
use crate::math;

/// LSTM weights. Gate blocks are ordered input, forget, cell, output; each
/// weight matrix is stored `fan_in × 4H`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    pub input_dim: usize,
    pub hidden: usize,
    pub w_input: Vec<f64>,
    pub w_recurrent: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Fully connected layer; `weights` is `inputs × outputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }
}

/// All trainable weights. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layout: InputLayout,
    pub lstm: Lstm,
    pub hidden: Vec<Dense>,
    pub output: Dense,
}

impl ModelParams {
    /// All-zero parameters with the shapes implied by `cfg` and `layout`.
    pub fn zeros(cfg: &ModelConfig, layout: InputLayout) -> Self {
        let h = cfg.lstm_units;
        let lstm = Lstm {
            input_dim: layout.services,
            hidden: h,
            w_input: vec![0.0; layout.services * 4 * h],
            w_recurrent: vec![0.0; h * 4 * h],
            bias: vec![0.0; 4 * h],
        };
        let mut fan_in = layout.steps * h + layout.static_len;
        let mut hidden = Vec::with_capacity(cfg.fc_layers);
        for width in cfg.hidden_widths() {
            hidden.push(Dense::zeros(fan_in, width));
            fan_in = width;
        }
        Self { layout, lstm, hidden, output: Dense::zeros(fan_in, 1) }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    pub fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }

    /// Width of the dense stack's input.
    pub fn merged_width(&self) -> usize {
        self.layout.steps * self.lstm.hidden + self.layout.static_len
    }

    /// Parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.lstm.w_input, &self.lstm.w_recurrent, &self.lstm.bias];
        for d in &self.hidden {
            out.push(&d.weights);
            out.push(&d.bias);
        }
        out.push(&self.output.weights);
        out.push(&self.output.bias);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> =
            vec![&mut self.lstm.w_input, &mut self.lstm.w_recurrent, &mut self.lstm.bias];
        for d in &mut self.hidden {
            out.push(&mut d.weights);
            out.push(&mut d.bias);
        }
        out.push(&mut self.output.weights);
        out.push(&mut self.output.bias);
        out
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelParams, scale: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    /// Sum of squared weights over the hidden dense layers (biases excluded).
    pub fn l2_norm_sq(&self) -> f64 {
        self.hidden.iter().flat_map(|d| d.weights.iter()).map(|w| w * w).sum()
    }

    pub fn output_bias(&self) -> f64 {
        self.output.bias[0]
    }
}

fn fill_uniform(values: &mut [f64], limit: f64, rng: &mut ChaCha8Rng) {
    for v in values {
        *v = rng.random_range(-limit..=limit);
    }
}

/// Seeded initialization.
///
/// Dense layers use a fan-in scaled uniform (`±√(6/fan_in)`), LSTM gates
/// `±√(3/fan_in)` with the forget-gate bias at 1, and the output unit a
/// tenth of the gate scale. The output bias is the log-odds of the training
/// positive fraction so an untrained model predicts that base rate.
pub fn init_params(cfg: &ModelConfig, layout: InputLayout, positive_fraction: f64) -> Result<ModelParams> {
    if !(positive_fraction > 0.0 && positive_fraction < 1.0) {
        return Err(CoreError::PositiveFraction(positive_fraction));
    }
    if cfg.lstm_units == 0 || layout.services == 0 || layout.steps == 0 {
        return Err(CoreError::Invalid("LSTM needs at least one unit, step and service".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut p = ModelParams::zeros(cfg, layout);
    let h = p.lstm.hidden;
    let gate_limit = math::sqrt(3.0 / (p.lstm.input_dim + h) as f64);
    fill_uniform(&mut p.lstm.w_input, gate_limit, &mut rng);
    fill_uniform(&mut p.lstm.w_recurrent, gate_limit, &mut rng);
    for b in &mut p.lstm.bias[h..2 * h] {
        *b = 1.0;
    }
    for d in &mut p.hidden {
        let limit = math::sqrt(6.0 / d.inputs as f64);
        fill_uniform(&mut d.weights, limit, &mut rng);
    }
    let out_limit = 0.1 * math::sqrt(3.0 / p.output.inputs as f64);
    fill_uniform(&mut p.output.weights, out_limit, &mut rng);
    p.output.bias[0] = math::ln(positive_fraction / (1.0 - positive_fraction));
    Ok(p)
}

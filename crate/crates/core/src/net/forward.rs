use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ModelParams;
use crate::error::{CoreError, Result};
use crate::math::{sigmoid, tanh};

/// Offsets of one example's activations inside a tape record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct RecordLayout {
    pub gates: usize,
    pub cell: usize,
    pub tanh_cell: usize,
    pub hidden: usize,
    /// `(pre-activation, activation, dropout scale, width)` per dense layer.
    pub dense: Vec<(usize, usize, usize, usize)>,
    pub logit: usize,
    pub len: usize,
}

impl RecordLayout {
    pub fn new(p: &ModelParams) -> Self {
        let h = p.lstm.hidden;
        let steps = p.layout.steps;
        let gates = 0;
        let cell = gates + steps * 4 * h;
        let tanh_cell = cell + steps * h;
        let hidden = tanh_cell + steps * h;
        let mut at = hidden + steps * h;
        let mut dense = Vec::with_capacity(p.hidden.len());
        for d in &p.hidden {
            let w = d.outputs;
            dense.push((at, at + w, at + 2 * w, w));
            at += 3 * w;
        }
        Self { gates, cell, tanh_cell, hidden, dense, logit: at, len: at + 1 }
    }
}

/// Reusable activation storage for a batch of examples.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    pub(crate) layout: Option<RecordLayout>,
    pub(crate) buf: Vec<f64>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn prepare(&mut self, p: &ModelParams, examples: usize) -> RecordLayout {
        let layout = match &self.layout {
            Some(l) if *l == RecordLayout::new(p) => l.clone(),
            _ => {
                let l = RecordLayout::new(p);
                self.layout = Some(l.clone());
                l
            }
        };
        let need = layout.len * examples;
        if self.buf.len() < need {
            self.buf.resize(need, 0.0);
        }
        layout
    }
}

pub(crate) fn check_width(p: &ModelParams, x: &[f64]) -> Result<usize> {
    let width = p.layout.width();
    if width == 0 || x.len() % width != 0 {
        return Err(CoreError::Shape { expected: width, got: x.len() });
    }
    Ok(x.len() / width)
}

/// A uniform `u32` below this value drops a unit.
fn drop_threshold(rate: f64) -> u32 {
    (rate * 4_294_967_296.0).min(u32::MAX as f64) as u32
}

/// Forward pass for one row, recording activations into `rec`.
/// With `dropout` set, inverted dropout masks are drawn for every dense layer.
pub(crate) fn forward_record(
    p: &ModelParams,
    x: &[f64],
    rec: &mut [f64],
    rl: &RecordLayout,
    mut dropout: Option<(&mut ChaCha8Rng, f64)>,
) -> f64 {
    let lstm = &p.lstm;
    let h = lstm.hidden;
    let g4 = 4 * h;
    let steps = p.layout.steps;

    let (gate_rec, state_rec) = rec.split_at_mut(rl.cell);
    let (c_off, tc_off, h_off) = (0, rl.tanh_cell - rl.cell, rl.hidden - rl.cell);
    for s in 0..steps {
        let xt = p.layout.step(x, steps - 1 - s);
        let pre = &mut gate_rec[rl.gates + s * g4..rl.gates + (s + 1) * g4];
        pre.copy_from_slice(&lstm.bias);
        for (d, &xv) in xt.iter().enumerate() {
            if xv != 0.0 {
                let row = &lstm.w_input[d * g4..(d + 1) * g4];
                for (a, w) in pre.iter_mut().zip(row) {
                    *a += xv * w;
                }
            }
        }
        if s > 0 {
            let h_prev = &state_rec[h_off + (s - 1) * h..h_off + s * h];
            for (k, &hv) in h_prev.iter().enumerate() {
                let row = &lstm.w_recurrent[k * g4..(k + 1) * g4];
                for (a, w) in pre.iter_mut().zip(row) {
                    *a += hv * w;
                }
            }
        }
        for j in 0..h {
            pre[j] = sigmoid(pre[j]);
            pre[h + j] = sigmoid(pre[h + j]);
            pre[2 * h + j] = tanh(pre[2 * h + j]);
            pre[3 * h + j] = sigmoid(pre[3 * h + j]);
        }
        for j in 0..h {
            let (i, f, g, o) = (pre[j], pre[h + j], pre[2 * h + j], pre[3 * h + j]);
            let c_prev = if s > 0 { state_rec[c_off + (s - 1) * h + j] } else { 0.0 };
            let c = f * c_prev + i * g;
            let tc = tanh(c);
            state_rec[c_off + s * h + j] = c;
            state_rec[tc_off + s * h + j] = tc;
            state_rec[h_off + s * h + j] = o * tc;
        }
    }

    let recurrent_len = steps * h;
    for (l, layer) in p.hidden.iter().enumerate() {
        let (z_off, _, _, width) = rl.dense[l];
        let (head, tail) = rec.split_at_mut(z_off);
        let (z, rest) = tail.split_at_mut(width);
        let (a, rest) = rest.split_at_mut(width);
        let mask = &mut rest[..width];
        z.copy_from_slice(&layer.bias);
        let mut accumulate = |k: usize, v: f64| {
            if v != 0.0 {
                let row = &layer.weights[k * width..(k + 1) * width];
                for (zj, w) in z.iter_mut().zip(row) {
                    *zj += v * w;
                }
            }
        };
        if l == 0 {
            for (k, &v) in head[rl.hidden..rl.hidden + recurrent_len].iter().enumerate() {
                accumulate(k, v);
            }
            for (k, &v) in x[..p.layout.static_len].iter().enumerate() {
                accumulate(recurrent_len + k, v);
            }
        } else {
            let (_, prev_a, _, prev_w) = rl.dense[l - 1];
            for (k, &v) in head[prev_a..prev_a + prev_w].iter().enumerate() {
                accumulate(k, v);
            }
        }
        for j in 0..width {
            if z[j] <= 0.0 {
                mask[j] = 0.0;
                a[j] = 0.0;
                continue;
            }
            let scale = match dropout.as_mut() {
                Some((rng, rate)) if *rate > 0.0 => {
                    if rng.random::<u32>() < drop_threshold(*rate) {
                        0.0
                    } else {
                        1.0 / (1.0 - *rate)
                    }
                }
                _ => 1.0,
            };
            mask[j] = scale;
            a[j] = z[j] * scale;
        }
    }

    let out = &p.output;
    let mut logit = out.bias[0];
    let last: &[f64] = match rl.dense.last() {
        Some(&(_, a_off, _, w)) => &rec[a_off..a_off + w],
        None => &rec[rl.hidden..rl.hidden + recurrent_len],
    };
    if p.hidden.is_empty() {
        for (k, &v) in last.iter().chain(&x[..p.layout.static_len]).enumerate() {
            logit += v * out.weights[k];
        }
    } else {
        for (v, w) in last.iter().zip(&out.weights) {
            logit += v * w;
        }
    }
    rec[rl.logit] = logit;
    logit
}

/// Name of the first stage whose recorded activations are not finite.
pub(crate) fn non_finite_stage(rec: &[f64], rl: &RecordLayout) -> Option<String> {
    let bad = |r: core::ops::Range<usize>| rec[r].iter().any(|v| !v.is_finite());
    if bad(rl.gates..rl.hidden + (rl.hidden - rl.tanh_cell)) {
        return Some("lstm".into());
    }
    for (l, &(z, _, _, w)) in rl.dense.iter().enumerate() {
        if bad(z..z + 3 * w) {
            return Some(format!("dense layer {l}"));
        }
    }
    if !rec[rl.logit].is_finite() {
        return Some("output".into());
    }
    None
}

/// Output logits for a batch of rows (inference mode, no dropout).
pub fn predict_logits(p: &ModelParams, x: &[f64]) -> Result<Vec<f64>> {
    let n = check_width(p, x)?;
    let rl = RecordLayout::new(p);
    let mut rec = vec![0.0; rl.len];
    let width = p.layout.width();
    Ok(x.chunks_exact(width).take(n).map(|row| forward_record(p, row, &mut rec, &rl, None)).collect())
}

/// Sigmoid probabilities for a batch of rows (inference mode).
pub fn predict_proba(p: &ModelParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(predict_logits(p, x)?.into_iter().map(sigmoid).collect())
}

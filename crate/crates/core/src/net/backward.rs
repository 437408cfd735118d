//! Backpropagation through the dense stack and the LSTM recurrence.

use alloc::vec;
use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;

use super::forward::{check_width, forward_record, non_finite_stage, Tape};
use super::ModelParams;
use crate::error::{CoreError, Result};
use crate::loss::LossKind;

/// Loss of one minibatch; the gradient is written to the caller's buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchGradient {
    /// Data loss plus the L2 penalty.
    pub loss: f64,
    pub data_loss: f64,
}

/// Exact gradient of `loss(y, σ(f(x))) + γ Σ‖W_dense‖²` at `p`.
///
/// `grad` must have the shapes of `p`; it is overwritten. With `dropout`
/// set the forward pass samples inverted-dropout masks from the given
/// stream, otherwise it runs in inference mode.
pub fn batch_gradient(
    p: &ModelParams,
    loss: LossKind,
    l2_gamma: f64,
    x: &[f64],
    y: &[f64],
    mut dropout: Option<(&mut ChaCha8Rng, f64)>,
    tape: &mut Tape,
    grad: &mut ModelParams,
) -> Result<BatchGradient> {
    let n = check_width(p, x)?;
    if n == 0 {
        return Err(CoreError::Empty("minibatch"));
    }
    if y.len() != n {
        return Err(CoreError::Shape { expected: n, got: y.len() });
    }
    let width = p.layout.width();
    let rl = tape.prepare(p, n);
    let mut logits = Vec::with_capacity(n);
    for (i, row) in x.chunks_exact(width).enumerate() {
        let rec = &mut tape.buf[i * rl.len..(i + 1) * rl.len];
        let drop = dropout.as_mut().map(|(rng, rate)| (&mut **rng, *rate));
        let z = forward_record(p, row, rec, &rl, drop);
        if !z.is_finite() {
            let stage = non_finite_stage(rec, &rl).unwrap_or_else(|| "output".into());
            return Err(CoreError::NonFinite(stage));
        }
        logits.push(z);
    }
    let mut dlogits = vec![0.0; n];
    let data_loss = loss.evaluate(y, &logits, Some(&mut dlogits));
    if !data_loss.is_finite() {
        return Err(CoreError::NonFinite("loss".into()));
    }

    grad.fill(0.0);
    let h = p.lstm.hidden;
    let g4 = 4 * h;
    let steps = p.layout.steps;
    let recurrent_len = steps * h;
    let max_width = p
        .hidden
        .iter()
        .map(|d| d.inputs.max(d.outputs))
        .chain([p.output.inputs, p.merged_width()])
        .max()
        .unwrap_or(1);
    let mut da = vec![0.0; max_width];
    let mut da_prev = vec![0.0; max_width];
    let mut nz: Vec<usize> = Vec::with_capacity(max_width);
    let mut dzv: Vec<f64> = Vec::with_capacity(max_width);
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dpre = vec![0.0; g4];

    for (i, row) in x.chunks_exact(width).enumerate() {
        let g = dlogits[i];
        if g == 0.0 {
            continue;
        }
        let rec = &tape.buf[i * rl.len..(i + 1) * rl.len];
        let merged_value = |k: usize| -> f64 {
            if k < recurrent_len {
                rec[rl.hidden + k]
            } else {
                row[k - recurrent_len]
            }
        };

        // output unit
        let out_in = p.output.inputs;
        grad.output.bias[0] += g;
        match rl.dense.last() {
            Some(&(_, a_off, _, w)) => {
                for (gw, &a) in grad.output.weights.iter_mut().zip(&rec[a_off..a_off + w]) {
                    *gw += g * a;
                }
            }
            None => {
                for k in 0..out_in {
                    grad.output.weights[k] += g * merged_value(k);
                }
            }
        }
        for (d, &w) in da.iter_mut().zip(&p.output.weights) {
            *d = g * w;
        }

        // dense stack, top down, visiting only units with a nonzero gradient
        for l in (0..p.hidden.len()).rev() {
            let layer = &p.hidden[l];
            let gl = &mut grad.hidden[l];
            let (z_off, _, m_off, w) = rl.dense[l];
            nz.clear();
            dzv.clear();
            for j in 0..w {
                if rec[z_off + j] > 0.0 && rec[m_off + j] != 0.0 && da[j] != 0.0 {
                    let d = da[j] * rec[m_off + j];
                    nz.push(j);
                    dzv.push(d);
                    gl.bias[j] += d;
                }
            }
            let fan_in = layer.inputs;
            // only the recurrent slice of the merged input needs a gradient
            let need_input_grad = if l == 0 { recurrent_len } else { fan_in };
            let prev_a = if l == 0 { 0 } else { rl.dense[l - 1].1 };
            for k in 0..fan_in {
                let a_k = if l == 0 { merged_value(k) } else { rec[prev_a + k] };
                if a_k != 0.0 {
                    let grow = &mut gl.weights[k * w..(k + 1) * w];
                    for (&j, &d) in nz.iter().zip(&dzv) {
                        grow[j] += a_k * d;
                    }
                }
                if k < need_input_grad {
                    da_prev[k] = if l == 0 || a_k != 0.0 {
                        let wrow = &layer.weights[k * w..(k + 1) * w];
                        nz.iter().zip(&dzv).map(|(&j, &d)| wrow[j] * d).sum()
                    } else {
                        0.0
                    };
                }
            }
            core::mem::swap(&mut da, &mut da_prev);
        }
        // LSTM, latest step first
        dh_next.fill(0.0);
        dc_next.fill(0.0);
        for s in (0..steps).rev() {
            let gates = &rec[rl.gates + s * g4..rl.gates + (s + 1) * g4];
            let tc = &rec[rl.tanh_cell + s * h..rl.tanh_cell + (s + 1) * h];
            for j in 0..h {
                let (ig, fg, gg, og) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                let c_prev = if s > 0 { rec[rl.cell + (s - 1) * h + j] } else { 0.0 };
                let dh = da[s * h + j] + dh_next[j];
                let d_o = dh * tc[j];
                let dc = dh * og * (1.0 - tc[j] * tc[j]) + dc_next[j];
                dc_next[j] = dc * fg;
                dpre[j] = dc * gg * ig * (1.0 - ig);
                dpre[h + j] = dc * c_prev * fg * (1.0 - fg);
                dpre[2 * h + j] = dc * ig * (1.0 - gg * gg);
                dpre[3 * h + j] = d_o * og * (1.0 - og);
            }
            for (b, d) in grad.lstm.bias.iter_mut().zip(&dpre) {
                *b += d;
            }
            let xt = p.layout.step(row, steps - 1 - s);
            for (d, &xv) in xt.iter().enumerate() {
                if xv != 0.0 {
                    for (gw, dp) in grad.lstm.w_input[d * g4..(d + 1) * g4].iter_mut().zip(&dpre) {
                        *gw += xv * dp;
                    }
                }
            }
            if s > 0 {
                let h_prev = &rec[rl.hidden + (s - 1) * h..rl.hidden + s * h];
                for k in 0..h {
                    let wrow = &p.lstm.w_recurrent[k * g4..(k + 1) * g4];
                    for (gw, dp) in grad.lstm.w_recurrent[k * g4..(k + 1) * g4].iter_mut().zip(&dpre) {
                        *gw += h_prev[k] * dp;
                    }
                    dh_next[k] = dot(wrow, &dpre);
                }
            }
        }
    }

    let mut penalty = 0.0;
    if l2_gamma != 0.0 {
        for (gl, layer) in grad.hidden.iter_mut().zip(&p.hidden) {
            for (gw, &w) in gl.weights.iter_mut().zip(&layer.weights) {
                *gw += 2.0 * l2_gamma * w;
                penalty += w * w;
            }
        }
        penalty *= l2_gamma;
    }
    if !grad.is_finite() {
        return Err(CoreError::NonFinite("gradient".into()));
    }
    Ok(BatchGradient { loss: data_loss + penalty, data_loss })
}

/// Dot product with four independent partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Full objective value without a gradient, in inference mode.
pub fn objective(p: &ModelParams, loss: LossKind, l2_gamma: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    let logits = super::predict_logits(p, x)?;
    Ok(loss.evaluate(y, &logits, None) + l2_gamma * p.l2_norm_sq())
}

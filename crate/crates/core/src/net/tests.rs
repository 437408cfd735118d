use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64;

use super::*;
use crate::loss::LossKind;

fn small_config(seed: u64) -> ModelConfig {
    ModelConfig { lstm_units: 2, fc_layers: 2, fc_first_width: 5, fc_rest_width: 3, seed, ..ModelConfig::default() }
}

fn small_layout() -> InputLayout {
    InputLayout { static_len: 3, steps: 3, services: 2 }
}

fn randomize(p: &mut ModelParams, rng: &mut ChaCha8Rng, scale: f64) {
    for t in p.tensors_mut() {
        for v in t {
            *v = rng.random_range(-scale..scale);
        }
    }
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, width: usize) -> Vec<f64> {
    (0..n * width).map(|_| rng.random_range(-1.5..1.5)).collect()
}

/// Straightforward re-derivation of the forward pass, allocation-heavy and
/// written against the math rather than the tape layout.
fn oracle_logit(p: &ModelParams, x: &[f64]) -> f64 {
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let lay = p.layout;
    let hdim = p.lstm.hidden;
    let d = lay.services;
    let mut h = vec![0.0; hdim];
    let mut c = vec![0.0; hdim];
    let mut merged = Vec::new();
    for t in (0..lay.steps).rev() {
        let xt: Vec<f64> = (0..d).map(|k| x[lay.static_len + t * d + k]).collect();
        let gate = |g: usize, j: usize| {
            let col = g * hdim + j;
            let mut s = p.lstm.bias[col];
            for k in 0..d {
                s += xt[k] * p.lstm.w_input[k * 4 * hdim + col];
            }
            for k in 0..hdim {
                s += h[k] * p.lstm.w_recurrent[k * 4 * hdim + col];
            }
            s
        };
        let i: Vec<f64> = (0..hdim).map(|j| sig(gate(0, j))).collect();
        let f: Vec<f64> = (0..hdim).map(|j| sig(gate(1, j))).collect();
        let g: Vec<f64> = (0..hdim).map(|j| gate(2, j).tanh()).collect();
        let o: Vec<f64> = (0..hdim).map(|j| sig(gate(3, j))).collect();
        for j in 0..hdim {
            c[j] = f[j] * c[j] + i[j] * g[j];
            h[j] = o[j] * c[j].tanh();
        }
        merged.extend_from_slice(&h);
    }
    merged.extend_from_slice(&x[..lay.static_len]);
    let mut a = merged;
    for layer in &p.hidden {
        let mut z = layer.bias.clone();
        for (k, av) in a.iter().enumerate() {
            for j in 0..layer.outputs {
                z[j] += av * layer.weights[k * layer.outputs + j];
            }
        }
        a = z.into_iter().map(|v| v.max(0.0)).collect();
    }
    p.output.bias[0] + a.iter().zip(&p.output.weights).map(|(u, v)| u * v).sum::<f64>()
}

#[test]
fn zero_weights_give_sigmoid_of_bias() {
    let cfg = small_config(1);
    let mut p = ModelParams::zeros(&cfg, small_layout());
    p.output.bias[0] = -1.3;
    let x = vec![0.0; small_layout().width()];
    let prob = predict_proba(&p, &x).unwrap()[0];
    assert!((prob - 1.0 / (1.0 + 1.3f64.exp())).abs() < 1e-15);
}

#[test]
fn forward_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..30 {
        let cfg = ModelConfig {
            lstm_units: 1 + trial % 4,
            fc_layers: trial % 3,
            fc_first_width: 6,
            fc_rest_width: 4,
            ..ModelConfig::default()
        };
        let layout = InputLayout { static_len: 1 + trial % 5, steps: 1 + trial % 6, services: 1 + trial % 3 };
        let mut p = ModelParams::zeros(&cfg, layout);
        randomize(&mut p, &mut rng, 0.8);
        let x = random_rows(&mut rng, 4, layout.width());
        let got = predict_logits(&p, &x).unwrap();
        for (row, g) in x.chunks_exact(layout.width()).zip(got) {
            let want = oracle_logit(&p, row);
            assert!((g - want).abs() < 1e-10, "trial {trial}: {g} vs {want}");
        }
    }
}

#[test]
fn inference_is_repeatable() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = init_params(&ModelConfig::default(), InputLayout { static_len: 20, steps: 6, services: 10 }, 0.1).unwrap();
    let x = random_rows(&mut rng, 10, 80);
    assert_eq!(predict_proba(&p, &x).unwrap(), predict_proba(&p, &x).unwrap());
}

#[test]
fn shape_mismatch_is_an_error() {
    let p = ModelParams::zeros(&small_config(0), small_layout());
    assert!(predict_proba(&p, &[0.0; 5]).is_err());
}

#[test]
fn output_bias_is_log_odds() {
    let layout = InputLayout { static_len: 10, steps: 6, services: 10 };
    let p = init_params(&ModelConfig::default(), layout, 0.5).unwrap();
    assert_eq!(p.output_bias(), 0.0);
    let p = init_params(&ModelConfig::default(), layout, 0.0656).unwrap();
    assert!((p.output_bias() - (0.0656f64 / 0.9344).ln()).abs() < 1e-15);
    assert!((p.output_bias() + 2.656).abs() < 1e-3);
    assert!(init_params(&ModelConfig::default(), layout, 0.0).is_err());
    assert!(init_params(&ModelConfig::default(), layout, 1.0).is_err());
}

#[test]
fn init_is_seeded() {
    let layout = InputLayout { static_len: 4, steps: 2, services: 3 };
    let a = init_params(&small_config(5), layout, 0.2).unwrap();
    let b = init_params(&small_config(5), layout, 0.2).unwrap();
    let c = init_params(&small_config(6), layout, 0.2).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn check_gradient(loss: LossKind, gamma: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layout = small_layout();
    let mut p = init_params(&small_config(seed), layout, 0.3).unwrap();
    randomize(&mut p, &mut rng, 0.7);
    let n = 9;
    let x = random_rows(&mut rng, n, layout.width());
    let y: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
    let mut grad = p.zeros_like();
    let mut tape = Tape::new();
    batch_gradient(&p, loss, gamma, &x, &y, None, &mut tape, &mut grad).unwrap();

    let step = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = p.clone();
    let analytic: Vec<f64> = grad.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    let mut idx = 0;
    for ti in 0..probe.tensors().len() {
        let len = probe.tensors()[ti].len();
        for k in 0..len {
            let orig = probe.tensors()[ti][k];
            probe.tensors_mut()[ti][k] = orig + step;
            let hi = objective(&probe, loss, gamma, &x, &y).unwrap();
            probe.tensors_mut()[ti][k] = orig - step;
            let lo = objective(&probe, loss, gamma, &x, &y).unwrap();
            probe.tensors_mut()[ti][k] = orig;
            let fd = (hi - lo) / (2.0 * step);
            worst = worst.max(relative_error(analytic[idx], fd));
            idx += 1;
        }
    }
    worst
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..5 {
        for loss in [LossKind::WeightedF1 { recall_weight: 4.5 }, LossKind::Bce, LossKind::WeightedBce { positive_weight: 2.0 }] {
            let err = check_gradient(loss, 1.78e-3, seed);
            assert!(err < 1e-4, "seed {seed} {loss:?}: {err}");
        }
    }
}

#[test]
fn l2_only_changes_dense_weights_by_two_gamma_w() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let layout = small_layout();
    let mut p = init_params(&small_config(9), layout, 0.3).unwrap();
    randomize(&mut p, &mut rng, 0.5);
    let x = random_rows(&mut rng, 6, layout.width());
    let y = [1.0, 0.0, 0.0, 1.0, 0.0, 0.0];
    let loss = LossKind::WeightedF1 { recall_weight: 4.5 };
    let mut tape = Tape::new();
    let mut g0 = p.zeros_like();
    let mut g1 = p.zeros_like();
    batch_gradient(&p, loss, 0.0, &x, &y, None, &mut tape, &mut g0).unwrap();
    batch_gradient(&p, loss, 0.01, &x, &y, None, &mut tape, &mut g1).unwrap();
    assert_eq!(g0.lstm, g1.lstm);
    assert_eq!(g0.output, g1.output);
    for ((a, b), layer) in g0.hidden.iter().zip(&g1.hidden).zip(&p.hidden) {
        assert_eq!(a.bias, b.bias);
        for ((ga, gb), w) in a.weights.iter().zip(&b.weights).zip(&layer.weights) {
            assert!((gb - ga - 0.02 * w).abs() < 1e-15);
        }
    }
}

#[test]
fn duplicated_batch_has_identical_f1_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let layout = small_layout();
    let mut p = init_params(&small_config(4), layout, 0.3).unwrap();
    randomize(&mut p, &mut rng, 0.5);
    let x = random_rows(&mut rng, 5, layout.width());
    let y = vec![1.0, 0.0, 1.0, 0.0, 0.0];
    let mut x2 = x.clone();
    x2.extend_from_slice(&x);
    let mut y2 = y.clone();
    y2.extend_from_slice(&y);
    let loss = LossKind::WeightedF1 { recall_weight: 4.5 };
    let mut tape = Tape::new();
    let mut g1 = p.zeros_like();
    let mut g2 = p.zeros_like();
    let l1 = batch_gradient(&p, loss, 1e-3, &x, &y, None, &mut tape, &mut g1).unwrap();
    let l2 = batch_gradient(&p, loss, 1e-3, &x2, &y2, None, &mut tape, &mut g2).unwrap();
    assert!((l1.loss - l2.loss).abs() < 1e-12);
    for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
        for (u, v) in a.iter().zip(b) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}

#[test]
fn dropout_preserves_expected_activation() {
    // Mean of a masked activation over many draws matches the inference value.
    let cfg = ModelConfig { lstm_units: 2, fc_layers: 1, fc_first_width: 4, dropout_rate: 0.44, ..ModelConfig::default() };
    let layout = InputLayout { static_len: 2, steps: 2, services: 2 };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut p = ModelParams::zeros(&cfg, layout);
    randomize(&mut p, &mut rng, 0.9);
    for b in &mut p.hidden[0].bias {
        *b = 1.0;
    }
    p.output.weights.fill(0.25);
    let x = random_rows(&mut rng, 1, layout.width());
    let expected = predict_logits(&p, &x).unwrap()[0];
    let rl = super::forward::RecordLayout::new(&p);
    let mut rec = vec![0.0; rl.len];
    let draws = 20_000;
    let mut mask_rng = ChaCha8Rng::seed_from_u64(22);
    let samples: Vec<f64> = (0..draws)
        .map(|_| super::forward::forward_record(&p, &x, &mut rec, &rl, Some((&mut mask_rng, 0.44))))
        .collect();
    let mean = samples.iter().sum::<f64>() / draws as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    let se = (var / draws as f64).sqrt();
    assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected} (se {se})");
}

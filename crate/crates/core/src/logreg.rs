//! L2-regularized logistic regression with optional class weighting.
//!
//! Minimizes `(1/n) Σ c_i [softplus(z_i) − y_i z_i] + (λ/2)‖w‖²`, where
//! `c_i = (1 − p)/p` for positives when class weighting is on (`p` is the
//! positive fraction) and 1 otherwise. The intercept is not penalized.
//! Optimization is accelerated gradient descent with backtracking and
//! restarts, starting from zero.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub class_weighting: bool,
    pub l2: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self { class_weighting: true, l2: 1e-3, max_iter: 5000, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let w = self.weights.len();
        x.chunks_exact(w).map(|row| math::sigmoid(self.logit(row))).collect()
    }

    fn logit(&self, row: &[f64]) -> f64 {
        self.bias + row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegFit {
    pub model: LogisticModel,
    pub iterations: usize,
    pub grad_norm: f64,
    /// False when `max_iter` ran out before the gradient norm reached `tol`.
    pub converged: bool,
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    width: usize,
    pos_weight: f64,
    l2: f64,
}

impl Problem<'_> {
    /// Objective and gradient at `theta = [w, b]`.
    fn eval(&self, theta: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let (w, b) = theta.split_at(self.width);
        let n = self.y.len() as f64;
        let mut total = 0.0;
        let mut g = grad;
        if let Some(g) = g.as_deref_mut() {
            g.fill(0.0);
        }
        for (row, &yi) in self.x.chunks_exact(self.width).zip(self.y) {
            let z = b[0] + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
            let c = if yi > 0.5 { self.pos_weight } else { 1.0 };
            total += c * (math::softplus(z) - yi * z);
            if let Some(g) = g.as_deref_mut() {
                let r = c * (math::sigmoid(z) - yi) / n;
                for (gk, &a) in g[..self.width].iter_mut().zip(row) {
                    *gk += r * a;
                }
                g[self.width] += r;
            }
        }
        let reg: f64 = w.iter().map(|v| v * v).sum::<f64>() * 0.5 * self.l2;
        if let Some(g) = g {
            for (gk, &wk) in g[..self.width].iter_mut().zip(w) {
                *gk += self.l2 * wk;
            }
        }
        total / n + reg
    }
}

fn norm(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|a| a * a).sum())
}

pub fn train_logreg(x: &[f64], y: &[f64], width: usize, cfg: &LogRegConfig) -> Result<LogRegFit> {
    if y.is_empty() {
        return Err(CoreError::Empty("training set"));
    }
    if x.len() != y.len() * width {
        return Err(CoreError::Shape { expected: y.len() * width, got: x.len() });
    }
    let positives = y.iter().filter(|&&v| v > 0.5).count();
    let pos_weight = if cfg.class_weighting && positives > 0 && positives < y.len() {
        let p = positives as f64 / y.len() as f64;
        (1.0 - p) / p
    } else {
        1.0
    };
    let prob = Problem { x, y, width, pos_weight, l2: cfg.l2 };
    let dim = width + 1;
    let mut theta = vec![0.0; dim];
    let mut prev = theta.clone();
    let mut v = theta.clone();
    let mut g = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut momentum = 1.0f64;
    let mut lipschitz = 1.0f64;
    let mut f_theta = prob.eval(&theta, Some(&mut g));
    let mut grad_norm = norm(&g);
    let mut iterations = 0;

    while iterations < cfg.max_iter && grad_norm >= cfg.tol {
        iterations += 1;
        let f_v = prob.eval(&v, Some(&mut g));
        let g_sq: f64 = g.iter().map(|a| a * a).sum();
        let f_trial = loop {
            for k in 0..dim {
                trial[k] = v[k] - g[k] / lipschitz;
            }
            let f = prob.eval(&trial, None);
            if f <= f_v - 0.5 * g_sq / lipschitz || lipschitz > 1e12 {
                break f;
            }
            lipschitz *= 2.0;
        };
        prev.copy_from_slice(&theta);
        if f_trial > f_theta {
            // restart momentum from the last accepted point
            momentum = 1.0;
            v.copy_from_slice(&theta);
            lipschitz *= 2.0;
            continue;
        }
        theta.copy_from_slice(&trial);
        f_theta = f_trial;
        let next = 0.5 * (1.0 + math::sqrt(1.0 + 4.0 * momentum * momentum));
        let beta = (momentum - 1.0) / next;
        for k in 0..dim {
            v[k] = theta[k] + beta * (theta[k] - prev[k]);
        }
        momentum = next;
        lipschitz *= 0.9;
        prob.eval(&theta, Some(&mut g));
        grad_norm = norm(&g);
    }
    let bias = theta[width];
    theta.truncate(width);
    Ok(LogRegFit { model: LogisticModel { weights: theta, bias }, iterations, grad_norm, converged: grad_norm < cfg.tol })
}

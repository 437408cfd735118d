//! Training objectives.
//!
//! The weighted F1 surrogate uses probabilistic precision and recall,
//! `P = Σyŷ / Σŷ` and `R = Σyŷ / Σy`, combined as
//! `L = 1 - 2PR / (aP + bR)` with `b = 2 / (w_R + 1)` and `a = 2 - b`.
//! The recall weight `w_R > 1` penalizes low recall more heavily; `w_R = 1`
//! gives `1 - F1`. Every denominator is floored at [`EPSILON`] so
//! all-negative minibatches stay finite.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;

pub const EPSILON: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    WeightedF1 { recall_weight: f64 },
    Bce,
    /// Binary cross-entropy with the positive term scaled by `positive_weight`.
    WeightedBce { positive_weight: f64 },
}

impl LossKind {
    /// Class-weighted BCE with positive weight `(1 - p) / p`.
    pub fn class_weighted_bce(positive_fraction: f64) -> Self {
        LossKind::WeightedBce { positive_weight: (1.0 - positive_fraction) / positive_fraction }
    }

    /// Loss of a batch given output logits. When `grad` is provided it
    /// receives `dL/dlogit` for each example.
    pub fn evaluate(&self, y: &[f64], logits: &[f64], grad: Option<&mut [f64]>) -> f64 {
        match *self {
            LossKind::WeightedF1 { recall_weight } => {
                let p: Vec<f64> = logits.iter().map(|&z| math::sigmoid(z)).collect();
                match grad {
                    Some(g) => {
                        let loss = weighted_f1_loss_grad(y, &p, recall_weight, g);
                        for (gi, pi) in g.iter_mut().zip(&p) {
                            *gi *= pi * (1.0 - pi);
                        }
                        loss
                    }
                    None => weighted_f1_loss(y, &p, recall_weight),
                }
            }
            LossKind::Bce => bce_logits(y, logits, 1.0, grad),
            LossKind::WeightedBce { positive_weight } => bce_logits(y, logits, positive_weight, grad),
        }
    }
}

/// Probabilistic precision, recall and the weighted-F1 loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftScores {
    pub precision: f64,
    pub recall: f64,
    pub loss: f64,
}

fn coefficients(recall_weight: f64) -> (f64, f64) {
    let b = 2.0 / (recall_weight + 1.0);
    (2.0 - b, b)
}

pub fn soft_scores(y: &[f64], p: &[f64], recall_weight: f64) -> SoftScores {
    let (a, b) = coefficients(recall_weight);
    let (mut tp, mut pred, mut pos) = (0.0, 0.0, 0.0);
    for (&yi, &pi) in y.iter().zip(p) {
        tp += yi * pi;
        pred += pi;
        pos += yi;
    }
    let precision = tp / pred.max(EPSILON);
    let recall = tp / pos.max(EPSILON);
    let denom = (a * precision + b * recall).max(EPSILON);
    SoftScores { precision, recall, loss: 1.0 - 2.0 * precision * recall / denom }
}

pub fn weighted_f1_loss(y: &[f64], p: &[f64], recall_weight: f64) -> f64 {
    soft_scores(y, p, recall_weight).loss
}

/// Weighted-F1 loss with `dL/dŷ` written to `grad`.
pub fn weighted_f1_loss_grad(y: &[f64], p: &[f64], recall_weight: f64, grad: &mut [f64]) -> f64 {
    let (a, b) = coefficients(recall_weight);
    let (mut tp, mut pred, mut pos) = (0.0, 0.0, 0.0);
    for (&yi, &pi) in y.iter().zip(p) {
        tp += yi * pi;
        pred += pi;
        pos += yi;
    }
    let pred_floored = pred < EPSILON;
    let pred_d = pred.max(EPSILON);
    let pos_d = pos.max(EPSILON);
    let precision = tp / pred_d;
    let recall = tp / pos_d;
    let raw_denom = a * precision + b * recall;
    let denom_floored = raw_denom < EPSILON;
    let denom = raw_denom.max(EPSILON);
    let f = 2.0 * precision * recall / denom;

    // dF/dP and dF/dR of 2PR / D with D = aP + bR (constant when floored).
    let (df_dp, df_dr) = if denom_floored {
        (2.0 * recall / denom, 2.0 * precision / denom)
    } else {
        (
            (2.0 * recall * denom - 2.0 * precision * recall * a) / (denom * denom),
            (2.0 * precision * denom - 2.0 * precision * recall * b) / (denom * denom),
        )
    };
    // Σy does not depend on ŷ, so dR/dŷ_i = y_i / Σy.
    let dp_common = if pred_floored { 0.0 } else { tp / (pred_d * pred_d) };
    for (g, &yi) in grad.iter_mut().zip(y) {
        let dp = yi / pred_d - dp_common;
        let dr = yi / pos_d;
        *g = -(df_dp * dp + df_dr * dr);
    }
    1.0 - f
}

/// Mean binary cross-entropy from logits with a weight on the positive term.
fn bce_logits(y: &[f64], logits: &[f64], positive_weight: f64, grad: Option<&mut [f64]>) -> f64 {
    let n = y.len().max(1) as f64;
    let mut total = 0.0;
    for (&yi, &z) in y.iter().zip(logits) {
        // -[w y ln σ(z) + (1-y) ln(1-σ(z))]
        total += positive_weight * yi * math::softplus(-z) + (1.0 - yi) * math::softplus(z);
    }
    if let Some(g) = grad {
        for ((gi, &yi), &z) in g.iter_mut().zip(y).zip(logits) {
            let s = math::sigmoid(z);
            *gi = (-positive_weight * yi * (1.0 - s) + (1.0 - yi) * s) / n;
        }
    }
    total / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_prediction_is_zero() {
        let y = [1.0, 0.0, 1.0, 0.0];
        assert!(weighted_f1_loss(&y, &y, 4.5).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_case() {
        // P = 2/3, R = 4/5, b = 4/11, a = 18/11  ->  L = 13/57
        let loss = weighted_f1_loss(&[1.0, 0.0], &[0.8, 0.4], 4.5);
        assert!((loss - 13.0 / 57.0).abs() < 1e-12, "{loss}");
    }

    #[test]
    fn unit_weight_is_one_minus_f1() {
        let y = [1.0, 0.0, 1.0, 1.0, 0.0];
        let p = [0.9, 0.3, 0.4, 0.7, 0.1];
        let s = soft_scores(&y, &p, 1.0);
        let f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
        assert!((s.loss - (1.0 - f1)).abs() < 1e-12);
    }

    #[test]
    fn all_negative_batch_is_finite() {
        let y = [0.0; 8];
        let p = [0.3; 8];
        let mut g = [0.0; 8];
        let l = weighted_f1_loss_grad(&y, &p, 4.5, &mut g);
        assert!(l.is_finite());
        assert!(g.iter().all(|v| v.is_finite()));
        let zero = [0.0; 8];
        assert!(weighted_f1_loss_grad(&y, &zero, 4.5, &mut g).is_finite());
    }

    #[test]
    fn f1_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(2..20);
            let y: Vec<f64> = (0..n).map(|i| if i == 0 || rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
            let w = rng.random_range(0.5..8.0);
            let mut g = vec![0.0; n];
            weighted_f1_loss_grad(&y, &p, w, &mut g);
            for i in 0..n {
                let h = 1e-6;
                let mut hi = p.clone();
                hi[i] += h;
                let mut lo = p.clone();
                lo[i] -= h;
                let fd = (weighted_f1_loss(&y, &hi, w) - weighted_f1_loss(&y, &lo, w)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7, "fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn bce_gradients_match_finite_differences() {
        let y = [1.0, 0.0, 0.0, 1.0];
        let z = [0.3, -1.2, 2.0, -0.5];
        for kind in [LossKind::Bce, LossKind::WeightedBce { positive_weight: 3.0 }, LossKind::WeightedF1 { recall_weight: 4.5 }] {
            let mut g = [0.0; 4];
            kind.evaluate(&y, &z, Some(&mut g));
            for i in 0..4 {
                let h = 1e-6;
                let mut hi = z;
                hi[i] += h;
                let mut lo = z;
                lo[i] -= h;
                let fd = (kind.evaluate(&y, &hi, None) - kind.evaluate(&y, &lo, None)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn weighted_bce_scales_positive_term() {
        let y = [1.0];
        let z = [0.0];
        let plain = LossKind::Bce.evaluate(&y, &z, None);
        let weighted = LossKind::WeightedBce { positive_weight: 2.0 }.evaluate(&y, &z, None);
        assert!((weighted - 2.0 * plain).abs() < 1e-12);
        assert!((plain - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn class_weight_from_fraction() {
        match LossKind::class_weighted_bce(0.2) {
            LossKind::WeightedBce { positive_weight } => assert!((positive_weight - 4.0).abs() < 1e-12),
            _ => unreachable!(),
        }
    }
}

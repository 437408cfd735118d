//! Thresholded classification metrics and rank-based ROC AUC.
//!
//! Ratios with a zero denominator are `None` rather than 0.

use alloc::vec::Vec;
use core::cmp::Ordering;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub accuracy: f64,
    pub confusion: Confusion,
}

pub fn confusion(y: &[f64], scores: &[f64], threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for (&yi, &si) in y.iter().zip(scores) {
        match (yi > 0.5, si >= threshold) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    c
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(y: &[f64], scores: &[f64], threshold: f64) -> Result<Metrics> {
    if y.is_empty() {
        return Err(CoreError::Empty("labels"));
    }
    if y.len() != scores.len() {
        return Err(CoreError::Shape { expected: y.len(), got: scores.len() });
    }
    let c = confusion(y, scores, threshold);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let precision = ratio(c.tp, c.tp + c.fp);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Ok(Metrics {
        recall,
        precision,
        f1,
        auc: roc_auc(y, scores),
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        confusion: c,
    })
}

/// Area under the ROC curve via the Mann-Whitney U statistic with mid-ranks
/// for ties. `None` if either class is absent.
pub fn roc_auc(y: &[f64], scores: &[f64]) -> Option<f64> {
    let n = y.len().min(scores.len());
    let n_pos = y[..n].iter().filter(|&&v| v > 0.5).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    // Sum of doubled ranks of positives keeps tied mid-ranks integral.
    let mut doubled_rank_sum: u128 = 0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j share the mid-rank (i + 1 + j) / 2
        let doubled_mid = (i + 1 + j) as u128;
        let pos_in_tie = order[i..j].iter().filter(|&&k| y[k] > 0.5).count() as u128;
        doubled_rank_sum += doubled_mid * pos_in_tie;
        i = j;
    }
    let np = n_pos as u128;
    let doubled_u = doubled_rank_sum - np * (np + 1);
    Some(doubled_u as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairwise_auc(y: &[f64], s: &[f64]) -> Option<f64> {
        let mut halves = 0u64;
        let (mut np, mut nn) = (0u64, 0u64);
        for (i, &yi) in y.iter().enumerate() {
            if yi > 0.5 {
                np += 1;
            } else {
                nn += 1;
            }
            for (j, &yj) in y.iter().enumerate() {
                if yi > 0.5 && yj < 0.5 {
                    if s[i] > s[j] {
                        halves += 2;
                    } else if s[i] == s[j] {
                        halves += 1;
                    }
                }
            }
        }
        (np > 0 && nn > 0).then(|| halves as f64 / (2.0 * np as f64 * nn as f64))
    }

    #[test]
    fn perfect_separation() {
        let y = [0.0, 0.0, 1.0, 1.0];
        let s = [0.1, 0.2, 0.8, 0.9];
        let m = compute_metrics(&y, &s, 0.5).unwrap();
        assert_eq!(m.recall, Some(1.0));
        assert_eq!(m.precision, Some(1.0));
        assert_eq!(m.f1, Some(1.0));
        assert_eq!(m.auc, Some(1.0));
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn constant_scores_give_half() {
        let y = [0.0, 1.0, 0.0, 1.0, 1.0];
        assert_eq!(roc_auc(&y, &[0.3; 5]), Some(0.5));
    }

    #[test]
    fn undefined_ratios() {
        let m = compute_metrics(&[0.0, 0.0], &[0.1, 0.2], 0.5).unwrap();
        assert_eq!(m.recall, None);
        assert_eq!(m.precision, None);
        assert_eq!(m.f1, None);
        assert_eq!(m.auc, None);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn matches_pairwise_on_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..200 {
            let n = rng.random_range(2..120);
            let y: alloc::vec::Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }).collect();
            // coarse scores force ties
            let s: alloc::vec::Vec<f64> = (0..n).map(|_| (rng.random_range(0..10) as f64) / 10.0).collect();
            assert_eq!(roc_auc(&y, &s), pairwise_auc(&y, &s));
        }
    }

    #[test]
    fn recall_never_rises_with_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y: alloc::vec::Vec<f64> = (0..300).map(|i| if i % 5 == 0 { 1.0 } else { 0.0 }).collect();
        let s: alloc::vec::Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
        let mut prev = f64::INFINITY;
        for k in 0..=20 {
            let r = compute_metrics(&y, &s, k as f64 / 20.0).unwrap().recall.unwrap();
            assert!(r <= prev);
            prev = r;
        }
    }
}

use alloc::string::String;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ridge::fit_weighted_ridge;
use super::sampler::TabularStats;
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    pub sample_size: usize,
    pub num_features: usize,
    pub ridge_lambda: f64,
    /// Defaults to `0.75 · √m` when unset.
    pub kernel_width: Option<f64>,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self { sample_size: 2000, num_features: 10, ridge_lambda: 1.0, kernel_width: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: usize,
    pub statement: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    /// Sorted by descending `|weight|`.
    pub entries: Vec<Contribution>,
    pub intercept: f64,
    pub r2: f64,
    pub prediction: f64,
}

impl LocalExplanation {
    /// Dense weight vector over all `m` interpretable features.
    pub fn dense_weights(&self, m: usize) -> Vec<f64> {
        let mut w = alloc::vec![0.0; m];
        for c in &self.entries {
            w[c.feature] = c.weight;
        }
        w
    }
}

/// Explain `black_box` around `instance`. `black_box` maps a row-major batch
/// of raw input rows to one probability per row.
pub fn explain_instance<F, R>(
    stats: &TabularStats,
    mut black_box: F,
    instance: &[f64],
    cfg: &LimeConfig,
    rng: &mut R,
) -> Result<LocalExplanation>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    R: Rng + ?Sized,
{
    let m = stats.n_features();
    if m == 0 {
        return Err(CoreError::Empty("interpretable features"));
    }
    let width = cfg.kernel_width.unwrap_or_else(|| stats.default_kernel_width());
    let sample = stats.perturb(instance, cfg.sample_size, width, rng)?;
    let n = sample.len();
    let targets = black_box(&sample.rows)?;
    if targets.len() != n {
        return Err(CoreError::Shape { expected: n, got: targets.len() });
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(CoreError::NonFinite(String::from("black-box output")));
    }

    let first = fit_weighted_ridge(&sample.z, n, m, &targets, &sample.weights, cfg.ridge_lambda)?;
    let k = cfg.num_features.min(m);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| first.weights[b].abs().total_cmp(&first.weights[a].abs()).then(a.cmp(&b)));
    order.truncate(k);

    let mut z = Vec::with_capacity(n * k);
    for s in 0..n {
        let row = &sample.z[s * m..(s + 1) * m];
        z.extend(order.iter().map(|&j| row[j]));
    }
    let fit = fit_weighted_ridge(&z, n, k, &targets, &sample.weights, cfg.ridge_lambda)?;

    let mut entries: Vec<Contribution> = order
        .iter()
        .zip(&fit.weights)
        .map(|(&j, &w)| Contribution { feature: j, statement: stats.statement(j, stats.value_of(j, instance)), weight: w })
        .collect();
    entries.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()).then(a.feature.cmp(&b.feature)));
    Ok(LocalExplanation { entries, intercept: fit.intercept, r2: fit.r2, prediction: targets[0] })
}

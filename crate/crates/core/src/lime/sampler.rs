use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::discretize::QuartileBins;
use crate::error::{CoreError, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    /// A numeric column, discretized into quartile bins.
    Numeric { column: usize },
    /// A one-hot group; its value is the index of the set column.
    OneHot { columns: Vec<usize>, labels: Vec<String> },
    /// A single 0/1 column.
    Flag { column: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretableFeature {
    pub name: String,
    pub kind: FeatureKind,
}

#[derive(Debug, Clone)]
struct FeatureStats {
    bins: Option<QuartileBins>,
    /// Cumulative training frequency of each value.
    cumulative: Vec<f64>,
    /// Training values falling in each bin (numeric features only).
    bin_values: Vec<Vec<f64>>,
}

/// Training-set statistics needed to perturb rows: value frequencies per
/// interpretable feature and, for numeric ones, quartile bins with their
/// empirical members.
#[derive(Debug, Clone)]
pub struct TabularStats {
    features: Vec<InterpretableFeature>,
    width: usize,
    stats: Vec<FeatureStats>,
}

/// Samples in the interpretable space with reconstructed rows and kernel
/// weights. Row 0 is the instance itself.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub n_features: usize,
    /// `n × n_features` indicators, 1 where the sample matches the instance.
    pub z: Vec<f64>,
    /// `n × width` reconstructed input rows.
    pub rows: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Perturbation {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `exp(-d² / width²)`.
pub fn kernel_weight(distance_sq: f64, kernel_width: f64) -> f64 {
    math::exp(-distance_sq / (kernel_width * kernel_width))
}

fn onehot_value(columns: &[usize], row: &[f64]) -> usize {
    columns.iter().position(|&c| row[c] > 0.5).unwrap_or(columns.len())
}

fn draw(cumulative: &[f64], u: f64) -> usize {
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

impl TabularStats {
    pub fn fit(x: &[f64], width: usize, features: Vec<InterpretableFeature>) -> Result<Self> {
        if width == 0 || x.len() % width != 0 {
            return Err(CoreError::Shape { expected: width, got: x.len() });
        }
        let n = x.len() / width;
        if n == 0 {
            return Err(CoreError::Empty("training rows"));
        }
        let mut stats = Vec::with_capacity(features.len());
        for f in &features {
            let cols: Vec<usize> = match &f.kind {
                FeatureKind::Numeric { column } | FeatureKind::Flag { column } => vec![*column],
                FeatureKind::OneHot { columns, labels } => {
                    if labels.len() != columns.len() {
                        return Err(CoreError::Invalid(format!("{}: labels and columns differ in length", f.name)));
                    }
                    columns.clone()
                }
            };
            if cols.iter().any(|&c| c >= width) {
                return Err(CoreError::Invalid(format!("{}: column out of range", f.name)));
            }
            let s = match &f.kind {
                FeatureKind::Numeric { column } => {
                    let values: Vec<f64> = x.chunks_exact(width).map(|r| r[*column]).collect();
                    let bins = QuartileBins::fit(&values);
                    let mut bin_values = vec![Vec::new(); bins.n_bins()];
                    for &v in &values {
                        bin_values[bins.bin(v)].push(v);
                    }
                    let counts: Vec<usize> = bin_values.iter().map(Vec::len).collect();
                    FeatureStats { bins: Some(bins), cumulative: cumulative(&counts, n), bin_values }
                }
                FeatureKind::OneHot { columns, .. } => {
                    let mut counts = vec![0usize; columns.len() + 1];
                    for r in x.chunks_exact(width) {
                        counts[onehot_value(columns, r)] += 1;
                    }
                    FeatureStats { bins: None, cumulative: cumulative(&counts, n), bin_values: Vec::new() }
                }
                FeatureKind::Flag { column } => {
                    let mut counts = [0usize; 2];
                    for r in x.chunks_exact(width) {
                        counts[usize::from(r[*column] > 0.5)] += 1;
                    }
                    FeatureStats { bins: None, cumulative: cumulative(&counts, n), bin_values: Vec::new() }
                }
            };
            stats.push(s);
        }
        Ok(Self { features, width, stats })
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn features(&self) -> &[InterpretableFeature] {
        &self.features
    }

    pub fn bins(&self, feature: usize) -> Option<&QuartileBins> {
        self.stats[feature].bins.as_ref()
    }

    /// `0.75 · √m` for `m` interpretable features.
    pub fn default_kernel_width(&self) -> f64 {
        0.75 * math::sqrt(self.features.len() as f64)
    }

    pub fn n_values(&self, feature: usize) -> usize {
        self.stats[feature].cumulative.len()
    }

    /// Training frequency of `value` for `feature`.
    pub fn frequency(&self, feature: usize, value: usize) -> f64 {
        let c = &self.stats[feature].cumulative;
        c[value] - if value == 0 { 0.0 } else { c[value - 1] }
    }

    pub fn value_of(&self, feature: usize, row: &[f64]) -> usize {
        match &self.features[feature].kind {
            FeatureKind::Numeric { column } => self.stats[feature].bins.as_ref().map_or(0, |b| b.bin(row[*column])),
            FeatureKind::OneHot { columns, .. } => onehot_value(columns, row),
            FeatureKind::Flag { column } => usize::from(row[*column] > 0.5),
        }
    }

    pub fn statement(&self, feature: usize, value: usize) -> String {
        let f = &self.features[feature];
        match &f.kind {
            FeatureKind::Numeric { .. } => match &self.stats[feature].bins {
                Some(b) => b.statement(&f.name, value),
                None => f.name.clone(),
            },
            FeatureKind::OneHot { labels, .. } => match labels.get(value) {
                Some(l) => format!("{}={}", f.name, l),
                None => format!("{}=none", f.name),
            },
            FeatureKind::Flag { .. } => format!("{}={}", f.name, value),
        }
    }

    /// Draw `n` samples around `instance`; the first is the instance itself.
    pub fn perturb<R: Rng + ?Sized>(&self, instance: &[f64], n: usize, kernel_width: f64, rng: &mut R) -> Result<Perturbation> {
        if instance.len() != self.width {
            return Err(CoreError::Shape { expected: self.width, got: instance.len() });
        }
        if n == 0 {
            return Err(CoreError::Empty("sample count"));
        }
        let m = self.features.len();
        let own: Vec<usize> = (0..m).map(|j| self.value_of(j, instance)).collect();
        let mut z = vec![1.0; n * m];
        let mut rows = Vec::with_capacity(n * self.width);
        let mut weights = Vec::with_capacity(n);
        rows.extend_from_slice(instance);
        weights.push(1.0);
        for s in 1..n {
            let start = rows.len();
            rows.extend_from_slice(instance);
            let row = &mut rows[start..];
            let zs = &mut z[s * m..(s + 1) * m];
            let mut differing = 0usize;
            for (j, f) in self.features.iter().enumerate() {
                let st = &self.stats[j];
                let value = draw(&st.cumulative, rng.random::<f64>());
                if value != own[j] {
                    zs[j] = 0.0;
                    differing += 1;
                }
                match &f.kind {
                    FeatureKind::Numeric { column } => {
                        let members = &st.bin_values[value];
                        row[*column] = members[rng.random_range(0..members.len())];
                    }
                    FeatureKind::OneHot { columns, .. } => {
                        for (k, &c) in columns.iter().enumerate() {
                            row[c] = if k == value { 1.0 } else { 0.0 };
                        }
                    }
                    FeatureKind::Flag { column } => row[*column] = value as f64,
                }
            }
            weights.push(kernel_weight(differing as f64, kernel_width));
        }
        Ok(Perturbation { n_features: m, z, rows, weights })
    }
}

fn cumulative(counts: &[usize], n: usize) -> Vec<f64> {
    let mut acc = 0usize;
    let mut out: Vec<f64> = counts
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / n as f64
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

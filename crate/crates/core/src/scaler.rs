//! Per-column standardization fit on training rows.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::math;

/// Mean/std standardizer over a chosen subset of columns of a row-major matrix.
///
/// Columns whose training standard deviation is zero are flagged constant
/// and left untouched by [`StandardScaler::transform`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub columns: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub constant: Vec<bool>,
}

impl StandardScaler {
    /// Fit on `rows` (row-major, `width` columns) using population statistics.
    pub fn fit(rows: &[f64], width: usize, columns: &[usize]) -> Result<Self> {
        if width == 0 || rows.len() % width != 0 {
            return Err(CoreError::Shape { expected: width, got: rows.len() });
        }
        let n = rows.len() / width;
        if n == 0 {
            return Err(CoreError::Empty("scaler training rows"));
        }
        if let Some(&c) = columns.iter().find(|&&c| c >= width) {
            return Err(CoreError::Invalid(alloc::format!("column {c} out of range")));
        }
        let mut means = Vec::with_capacity(columns.len());
        let mut stds = Vec::with_capacity(columns.len());
        let mut constant = Vec::with_capacity(columns.len());
        for &c in columns {
            let col = rows.iter().skip(c).step_by(width);
            let mean = col.clone().sum::<f64>() / n as f64;
            let var = col.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let std = math::sqrt(var);
            means.push(mean);
            stds.push(std);
            constant.push(!(std > 0.0));
        }
        Ok(Self { columns: columns.to_vec(), means, stds, constant })
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for (k, &c) in self.columns.iter().enumerate() {
            if !self.constant[k] {
                row[c] = (row[c] - self.means[k]) / self.stds[k];
            }
        }
    }

    pub fn transform(&self, rows: &mut [f64], width: usize) {
        for row in rows.chunks_exact_mut(width) {
            self.transform_row(row);
        }
    }

    pub fn inverse_row(&self, row: &mut [f64]) {
        for (k, &c) in self.columns.iter().enumerate() {
            if !self.constant[k] {
                row[c] = row[c] * self.stds[k] + self.means[k];
            }
        }
    }
}

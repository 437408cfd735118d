//! LSTM + multilayer-perceptron classifier.
//!
//! An input row is `[static block | dynamic block]`; the dynamic block holds
//! `steps × services` counts, row-major, most recent step first. The LSTM
//! reads the steps oldest-first, every step's hidden state is kept, and the
//! concatenation `[h_1 .. h_T | static block]` feeds a stack of rectified,
//! dropout-regularized dense layers ending in one sigmoid unit.

mod backward;
mod config;
mod forward;
mod params;

pub use backward::{batch_gradient, objective, BatchGradient};
pub use config::ModelConfig;
pub use forward::{predict_logits, predict_proba, Tape};
pub use params::{init_params, Dense, Lstm, ModelParams};

use serde::{Deserialize, Serialize};

/// Column layout of an encoded input row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputLayout {
    pub static_len: usize,
    pub steps: usize,
    pub services: usize,
}

impl InputLayout {
    pub fn width(&self) -> usize {
        self.static_len + self.steps * self.services
    }

    /// Counts for step `t` (0 = most recent).
    pub fn step<'a>(&self, row: &'a [f64], t: usize) -> &'a [f64] {
        let start = self.static_len + t * self.services;
        &row[start..start + self.services]
    }

    pub fn dynamic_range(&self) -> core::ops::Range<usize> {
        self.static_len..self.width()
    }
}

#[cfg(test)]
mod tests;

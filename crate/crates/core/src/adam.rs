//! Adam optimizer with bias-corrected moment estimates.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::net::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(learning_rate: f64, len: usize) -> Self {
        Self { learning_rate, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }

    /// One update of a flat parameter vector.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step_tensors(core::iter::once((params, grads)));
    }

    /// One update over model tensors, in [`ModelParams::tensors`] order.
    pub fn step_model(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        let pairs = params.tensors_mut().into_iter().zip(grads.tensors());
        self.step_tensors(pairs);
    }

    fn step_tensors<'a, I>(&mut self, pairs: I)
    where
        I: IntoIterator<Item = (&'a mut [f64], &'a [f64])>,
    {
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - libm::pow(self.beta1, t as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, t as f64);
        let mut at = 0;
        for (params, grads) in pairs {
            let m = &mut self.m[at..at + params.len()];
            let v = &mut self.v[at..at + params.len()];
            for (((w, &g), mi), vi) in params.iter_mut().zip(grads).zip(m).zip(v) {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= self.learning_rate * m_hat / (math::sqrt(v_hat) + self.epsilon);
            }
            at += params.len();
        }
    }
}

//! Minibatch training with Adam and early stopping on validation loss.

use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::error::{CoreError, Result};
use crate::loss::LossKind;
use crate::net::{batch_gradient, init_params, objective, predict_proba, InputLayout, ModelConfig, ModelParams, Tape};

/// Borrowed rows (row-major) with their 0/1 labels.
#[derive(Debug, Clone, Copy)]
pub struct SampleView<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub layout: InputLayout,
}

impl<'a> SampleView<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64], layout: InputLayout) -> Result<Self> {
        let w = layout.width();
        if w == 0 || x.len() != y.len() * w {
            return Err(CoreError::Shape { expected: y.len() * w, got: x.len() });
        }
        Ok(Self { x, y, layout })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        let w = self.layout.width();
        &self.x[i * w..(i + 1) * w]
    }

    pub fn positive_fraction(&self) -> f64 {
        self.y.iter().filter(|&&v| v > 0.5).count() as f64 / self.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_epoch: usize,
}

/// Tracks the best validation loss and decides when patience runs out.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Progress {
    Improved,
    Waiting,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: f64::INFINITY, best_epoch: 0, epoch: 0 }
    }

    pub fn observe(&mut self, val_loss: f64) -> Progress {
        self.epoch += 1;
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = self.epoch;
            Progress::Improved
        } else if self.epoch - self.best_epoch >= self.patience {
            Progress::Stop
        } else {
            Progress::Waiting
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Per-epoch numbers handed to a training observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

pub fn train(cfg: &ModelConfig, loss: LossKind, train: SampleView<'_>, val: SampleView<'_>) -> Result<(ModelParams, TrainReport)> {
    train_with(cfg, loss, train, val, |_| {})
}

/// Train from a seeded initialization and return the weights of the epoch
/// with the lowest validation loss.
pub fn train_with<F>(
    cfg: &ModelConfig,
    loss: LossKind,
    train: SampleView<'_>,
    val: SampleView<'_>,
    mut observer: F,
) -> Result<(ModelParams, TrainReport)>
where
    F: FnMut(EpochStats),
{
    if train.is_empty() {
        return Err(CoreError::Empty("training set"));
    }
    if val.is_empty() {
        return Err(CoreError::Empty("validation set"));
    }
    if train.layout != val.layout {
        return Err(CoreError::Invalid("training and validation layouts differ".into()));
    }
    if cfg.batch_size == 0 {
        return Err(CoreError::Invalid("batch size must be positive".into()));
    }
    let positive_fraction = train.positive_fraction();
    if positive_fraction == 0.0 {
        return Err(CoreError::NoPositives);
    }
    let mut params = init_params(cfg, train.layout, positive_fraction)?;
    let mut grad = params.zeros_like();
    let mut adam = Adam::new(cfg.learning_rate, params.len());
    let mut tape = Tape::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let width = train.layout.width();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut bx: Vec<f64> = Vec::with_capacity(cfg.batch_size * width);
    let mut by: Vec<f64> = Vec::with_capacity(cfg.batch_size);

    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best = params.clone();
    let mut report = TrainReport { train_loss: Vec::new(), val_loss: Vec::new(), best_epoch: 0, stopped_epoch: 0 };

    for epoch in 1..=cfg.max_epochs {
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.extend_from_slice(train.row(i));
                by.push(train.y[i]);
            }
            let step = batch_gradient(
                &params,
                loss,
                cfg.l2_gamma,
                &bx,
                &by,
                Some((&mut rng, cfg.dropout_rate)),
                &mut tape,
                &mut grad,
            )?;
            adam.step_model(&mut params, &grad);
            total += step.loss;
            batches += 1;
        }
        let train_loss = total / batches as f64;
        let val_loss = objective(&params, loss, cfg.l2_gamma, val.x, val.y)?;
        if !val_loss.is_finite() {
            return Err(CoreError::NonFinite("validation loss".into()));
        }
        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);
        report.stopped_epoch = epoch;
        observer(EpochStats { epoch, train_loss, val_loss });
        match stopper.observe(val_loss) {
            Progress::Improved => best.clone_from(&params),
            Progress::Waiting => {}
            Progress::Stop => break,
        }
    }
    report.best_epoch = stopper.best_epoch();
    Ok((best, report))
}

/// Probabilities and thresholded labels; a probability equal to the
/// threshold is labeled positive.
pub fn predict(params: &ModelParams, x: &[f64], threshold: f64) -> Result<(Vec<f64>, Vec<u8>)> {
    let probs = predict_proba(params, x)?;
    let labels = probs.iter().map(|&p| u8::from(p >= threshold)).collect();
    Ok((probs, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn early_stopping_arithmetic() {
        let mut s = EarlyStopping::new(15);
        let mut stopped = 0;
        for epoch in 1..=100 {
            let loss = if epoch <= 3 { 1.0 / epoch as f64 } else { epoch as f64 };
            if s.observe(loss) == Progress::Stop {
                stopped = epoch;
                break;
            }
        }
        assert_eq!(s.best_epoch(), 3);
        assert_eq!(stopped, 18);
    }

    #[test]
    fn threshold_boundary_is_positive() {
        let cfg = ModelConfig { fc_layers: 1, fc_first_width: 2, ..ModelConfig::default() };
        let layout = InputLayout { static_len: 1, steps: 1, services: 1 };
        let mut p = ModelParams::zeros(&cfg, layout);
        p.output.bias[0] = 0.0;
        let (probs, labels) = predict(&p, &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(probs, vec![0.5]);
        assert_eq!(labels, vec![1]);
        let (_, labels) = predict(&p, &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(labels, vec![1]);
    }

    #[test]
    fn refuses_training_without_positives() {
        let layout = InputLayout { static_len: 1, steps: 1, services: 1 };
        let x = [0.0, 1.0, 1.0, 0.0];
        let y = [0.0, 0.0];
        let v = SampleView::new(&x, &y, layout).unwrap();
        let r = train(&ModelConfig::default(), LossKind::Bce, v, v);
        assert_eq!(r.unwrap_err(), CoreError::NoPositives);
    }
}

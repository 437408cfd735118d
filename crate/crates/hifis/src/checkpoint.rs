//! Trained-model checkpoints and the final fit on a whole dataset.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use hifis_core::scaler::StandardScaler;
use hifis_core::train::{train, SampleView};
use hifis_core::{ModelConfig, ModelParams, TrainReport};

use crate::dataset::{read_json, write_json, Dataset};
use crate::error::{Error, Result};
use crate::eval::LossChoice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub cfg: ModelConfig,
    pub loss: LossChoice,
    pub schema_hash: String,
    /// Latest grid date whose examples were used for fitting.
    pub train_end: NaiveDate,
    /// Latest grid date used for early stopping.
    pub val_end: NaiveDate,
    pub scaler: StandardScaler,
    pub params: ModelParams,
    pub report: TrainReport,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    /// Load and refuse a checkpoint trained on a different feature schema.
    pub fn load(path: &Path, expected_hash: &str) -> Result<Self> {
        let ck: Checkpoint = read_json(path)?;
        if ck.schema_hash != expected_hash {
            return Err(Error::SchemaMismatch { expected: expected_hash.to_string(), found: ck.schema_hash });
        }
        Ok(ck)
    }

    /// Indices of the examples the model was fitted or validated on.
    pub fn seen_examples(&self, ds: &Dataset) -> Vec<usize> {
        (0..ds.len()).filter(|&i| ds.examples[i].date <= self.val_end).collect()
    }

    pub fn train_examples(&self, ds: &Dataset) -> Vec<usize> {
        (0..ds.len()).filter(|&i| ds.examples[i].date <= self.train_end).collect()
    }
}

/// Fit on every grid date except the last `val_steps`, which drive early stopping.
pub fn train_final(ds: &Dataset, cfg: &ModelConfig, loss: LossChoice, val_steps: usize) -> Result<Checkpoint> {
    let mut dates = ds.dates();
    dates.dedup();
    if val_steps == 0 || dates.len() <= val_steps {
        return Err(Error::Config(format!("training needs more than {val_steps} time steps, dataset has {}", dates.len())));
    }
    let train_end = dates[dates.len() - val_steps - 1];
    let (train_idx, val_idx): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| ds.examples[i].date <= train_end);
    let scaler = ds.fit_scaler(&train_idx)?;
    let width = ds.width();
    let layout = ds.schema.layout();
    let (mut xt, yt) = ds.matrix(&train_idx);
    let (mut xv, yv) = ds.matrix(&val_idx);
    scaler.transform(&mut xt, width);
    scaler.transform(&mut xv, width);
    let train_view = SampleView::new(&xt, &yt, layout)?;
    let kind = loss.resolve(cfg, train_view.positive_fraction());
    let (params, report) = train(cfg, kind, train_view, SampleView::new(&xv, &yv, layout)?)?;
    log::info!("trained through {train_end}: best epoch {} of {}", report.best_epoch, report.stopped_epoch);
    Ok(Checkpoint { cfg: cfg.clone(), loss, schema_hash: ds.schema.hash(), train_end, val_end: dates[dates.len() - 1], scaler, params, report })
}

pub const TRAIN_REPORT_HEADER: [&str; 4] = ["epoch", "train_loss", "val_loss", "best"];

pub fn write_train_report(path: &Path, report: &TrainReport) -> Result<()> {
    let csv_err = |source| Error::Csv { file: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(TRAIN_REPORT_HEADER).map_err(csv_err)?;
    for (i, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate() {
        let epoch = i + 1;
        w.write_record([epoch.to_string(), t.to_string(), v.to_string(), u8::from(epoch == report.best_epoch).to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

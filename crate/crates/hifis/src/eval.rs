//! Nested rolling-origin cross-validation and model comparison.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use hifis_core::folds::FoldSpec;
use hifis_core::logreg::{train_logreg, LogRegConfig};
use hifis_core::loss::LossKind;
use hifis_core::metrics::{compute_metrics, Metrics};
use hifis_core::scaler::StandardScaler;
use hifis_core::train::{predict, train, SampleView};
use hifis_core::{ModelConfig, ModelParams, TrainReport};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// The recurrent network trained with one of the losses. A weighted BCE
    /// whose weight is not given uses `(1 - p) / p` from the training fold.
    RnnMlp { loss: LossChoice },
    LogisticRegression { class_weighting: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossChoice {
    WeightedF1,
    ClassWeightedBce,
    Bce,
}

impl LossChoice {
    pub fn resolve(self, cfg: &ModelConfig, positive_fraction: f64) -> LossKind {
        match self {
            LossChoice::WeightedF1 => LossKind::WeightedF1 { recall_weight: cfg.recall_weight },
            LossChoice::ClassWeightedBce => LossKind::class_weighted_bce(positive_fraction),
            LossChoice::Bce => LossKind::Bce,
        }
    }
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::RnnMlp { loss: LossChoice::WeightedF1 } => "rnn-mlp weighted-f1",
            ModelSpec::RnnMlp { loss: LossChoice::ClassWeightedBce } => "rnn-mlp class-weighted-bce",
            ModelSpec::RnnMlp { loss: LossChoice::Bce } => "rnn-mlp bce",
            ModelSpec::LogisticRegression { class_weighting: true } => "logistic-regression weighted",
            ModelSpec::LogisticRegression { class_weighting: false } => "logistic-regression",
        }
    }

    /// The four configurations of the model comparison.
    pub fn comparison() -> Vec<ModelSpec> {
        vec![
            ModelSpec::RnnMlp { loss: LossChoice::WeightedF1 },
            ModelSpec::RnnMlp { loss: LossChoice::ClassWeightedBce },
            ModelSpec::RnnMlp { loss: LossChoice::Bce },
            ModelSpec::LogisticRegression { class_weighting: true },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    pub val_steps: usize,
    pub test_steps: usize,
    /// Zero the dynamic block after scaling (static-only ablation).
    pub ablate_dynamic: bool,
    pub logreg: LogRegConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self { folds: 10, val_steps: 1, test_steps: 1, ablate_dynamic: false, logreg: LogRegConfig::default() }
    }
}

impl CvConfig {
    pub fn fold_spec(&self) -> FoldSpec {
        FoldSpec { val_steps: self.val_steps, test_steps: self.test_steps }
    }
}

/// Scaled matrices of one fold.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub fold: usize,
    pub scaler: StandardScaler,
    pub train: (Vec<f64>, Vec<f64>),
    pub val: (Vec<f64>, Vec<f64>),
    pub test: (Vec<f64>, Vec<f64>),
    pub last_train_date: NaiveDate,
    pub val_date: NaiveDate,
    pub test_date: NaiveDate,
}

impl FoldData {
    pub fn positive_fraction(&self) -> f64 {
        let y = &self.train.1;
        y.iter().sum::<f64>() / y.len() as f64
    }
}

/// Partition, fit the scaler on the training rows only, and scale.
pub fn prepare_fold(ds: &Dataset, fold: usize, cv: &CvConfig) -> Result<FoldData> {
    let split = ds.partition(fold, cv.fold_spec())?;
    let scaler = ds.fit_scaler(&split.train)?;
    let width = ds.width();
    let layout = ds.schema.layout();
    let prep = |idx: &[usize]| {
        let (mut x, y) = ds.matrix(idx);
        scaler.transform(&mut x, width);
        if cv.ablate_dynamic {
            for row in x.chunks_exact_mut(width) {
                row[layout.dynamic_range()].fill(0.0);
            }
        }
        (x, y)
    };
    let date = |idx: &[usize], last: bool| {
        let it = idx.iter().map(|&i| ds.examples[i].date);
        if last { it.max() } else { it.min() }.expect("nonempty split")
    };
    Ok(FoldData {
        fold,
        last_train_date: date(&split.train, true),
        val_date: date(&split.val, false),
        test_date: date(&split.test, false),
        train: prep(&split.train),
        val: prep(&split.val),
        test: prep(&split.test),
        scaler,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_date: NaiveDate,
    pub metrics: Metrics,
    pub train_report: Option<TrainReport>,
    /// Weights of the recurrent model, kept in memory only.
    #[serde(skip)]
    pub params: Option<ModelParams>,
}

/// Train `spec` on a prepared fold and score its test rows.
pub fn evaluate_fold(data: &FoldData, spec: &ModelSpec, cfg: &ModelConfig, cv: &CvConfig, layout: hifis_core::InputLayout) -> Result<FoldResult> {
    let width = layout.width();
    let (probs, report, kept) = match spec {
        ModelSpec::RnnMlp { loss } => {
            let loss = loss.resolve(cfg, data.positive_fraction());
            let train_view = SampleView::new(&data.train.0, &data.train.1, layout)?;
            let val_view = SampleView::new(&data.val.0, &data.val.1, layout)?;
            let (params, report) = train(cfg, loss, train_view, val_view)?;
            log::info!(
                "fold {} {}: best epoch {} of {}",
                data.fold,
                spec.name(),
                report.best_epoch,
                report.stopped_epoch
            );
            (predict(&params, &data.test.0, cfg.threshold)?.0, Some(report), Some(params))
        }
        ModelSpec::LogisticRegression { class_weighting } => {
            let lr = LogRegConfig { class_weighting: *class_weighting, ..cv.logreg.clone() };
            let fit = train_logreg(&data.train.0, &data.train.1, width, &lr)?;
            if !fit.converged {
                log::warn!(
                    "fold {}: logistic regression stopped after {} iterations with gradient norm {:.3e}",
                    data.fold,
                    fit.iterations,
                    fit.grad_norm
                );
            }
            (fit.model.predict_proba(&data.test.0), None, None)
        }
    };
    let metrics = compute_metrics(&data.test.1, &probs, cfg.threshold)?;
    Ok(FoldResult { fold: data.fold, test_date: data.test_date, metrics, train_report: report, params: kept })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: String,
    pub folds: Vec<FoldResult>,
    pub mean: Summary,
    /// Sample standard deviation across folds (0 for a single fold).
    pub std: Summary,
}

fn mean_std(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        return (None, None);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (Some(mean), Some(var.sqrt()))
}

impl CvReport {
    pub fn new(model: &str, folds: Vec<FoldResult>) -> Self {
        let m = |f: fn(&Metrics) -> Option<f64>| mean_std(folds.iter().map(|r| f(&r.metrics)));
        let (recall, recall_sd) = m(|x| x.recall);
        let (precision, precision_sd) = m(|x| x.precision);
        let (f1, f1_sd) = m(|x| x.f1);
        let (auc, auc_sd) = m(|x| x.auc);
        let (accuracy, accuracy_sd) = m(|x| Some(x.accuracy));
        Self {
            model: model.to_string(),
            mean: Summary { recall, precision, f1, auc, accuracy },
            std: Summary { recall: recall_sd, precision: precision_sd, f1: f1_sd, auc: auc_sd, accuracy: accuracy_sd },
            folds,
        }
    }
}

fn check_folds(ds: &Dataset, cv: &CvConfig) -> Result<()> {
    if cv.folds == 0 {
        return Err(Error::Config("at least one fold is required".into()));
    }
    let needed = cv.folds - 1 + cv.val_steps + cv.test_steps + 1;
    if ds.steps() < needed {
        return Err(Error::Config(format!("{} folds need {needed} time steps, dataset has {}", cv.folds, ds.steps())));
    }
    Ok(())
}

pub fn nested_cv(ds: &Dataset, cfg: &ModelConfig, spec: &ModelSpec, cv: &CvConfig) -> Result<CvReport> {
    Ok(compare_models(ds, cfg, cv, std::slice::from_ref(spec))?.remove(0))
}

/// Run every model on the same folds; one report per model.
pub fn compare_models(ds: &Dataset, cfg: &ModelConfig, cv: &CvConfig, specs: &[ModelSpec]) -> Result<Vec<CvReport>> {
    check_folds(ds, cv)?;
    let layout = ds.schema.layout();
    let mut per_model: Vec<Vec<FoldResult>> = vec![Vec::new(); specs.len()];
    for fold in 1..=cv.folds {
        let data = prepare_fold(ds, fold, cv).map_err(|e| e.in_fold(fold))?;
        for (spec, out) in specs.iter().zip(per_model.iter_mut()) {
            out.push(evaluate_fold(&data, spec, cfg, cv, layout).map_err(|e| e.in_fold(fold))?);
        }
    }
    Ok(specs.iter().zip(per_model).map(|(s, f)| CvReport::new(s.name(), f)).collect())
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub const CV_REPORT_HEADER: [&str; 12] =
    ["model", "fold", "test_date", "recall", "precision", "f1", "auc", "accuracy", "tp", "fp", "tn", "fn"];

/// One row per model and fold, then `mean` and `std` rows per model.
pub fn write_cv_report(path: &Path, reports: &[CvReport]) -> Result<()> {
    let csv_err = |source| Error::Csv { file: path.display().to_string(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CV_REPORT_HEADER).map_err(csv_err)?;
    for r in reports {
        for f in &r.folds {
            let m = &f.metrics;
            let c = &m.confusion;
            w.write_record([
                r.model.clone(),
                f.fold.to_string(),
                f.test_date.to_string(),
                cell(m.recall),
                cell(m.precision),
                cell(m.f1),
                cell(m.auc),
                cell(Some(m.accuracy)),
                c.tp.to_string(),
                c.fp.to_string(),
                c.tn.to_string(),
                c.fn_.to_string(),
            ])
            .map_err(csv_err)?;
        }
        for (label, s) in [("mean", &r.mean), ("std", &r.std)] {
            let mut row = vec![r.model.clone(), label.to_string(), String::new()];
            row.extend([s.recall, s.precision, s.f1, s.auc, s.accuracy].map(cell));
            row.extend(std::iter::repeat_n(String::new(), 4));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Console table in `mean [std]` form, percentages.
pub fn format_table(reports: &[CvReport]) -> String {
    let pct = |m: Option<f64>, s: Option<f64>| match (m, s) {
        (Some(m), Some(s)) => format!("{:.1} [{:.1}]", 100.0 * m, 100.0 * s),
        _ => "n/a".to_string(),
    };
    let mut out = format!("{:<30} {:>12} {:>12} {:>12} {:>12}\n", "model", "recall", "precision", "f1", "auc");
    for r in reports {
        let _ = writeln!(
            out,
            "{:<30} {:>12} {:>12} {:>12} {:>12}",
            r.model,
            pct(r.mean.recall, r.std.recall),
            pct(r.mean.precision, r.std.precision),
            pct(r.mean.f1, r.std.f1),
            pct(r.mean.auc, r.std.auc)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use hifis_core::metrics::Confusion;

    fn result(fold: usize, recall: Option<f64>) -> FoldResult {
        FoldResult {
            fold,
            test_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            metrics: Metrics { recall, precision: Some(0.5), f1: None, auc: Some(0.9), accuracy: 0.8, confusion: Confusion::default() },
            train_report: None,
            params: None,
        }
    }

    #[test]
    fn summary_skips_undefined_folds() {
        let r = CvReport::new("m", vec![result(1, Some(0.8)), result(2, None), result(3, Some(1.0))]);
        assert!((r.mean.recall.unwrap() - 0.9).abs() < 1e-12);
        assert!((r.std.recall.unwrap() - (0.02f64).sqrt()).abs() < 1e-12);
        assert_eq!(r.mean.f1, None);
        assert_eq!(r.std.precision, Some(0.0));
    }

    #[test]
    fn comparison_has_four_rows() {
        assert_eq!(ModelSpec::comparison().len(), 4);
        let names: std::collections::BTreeSet<_> = ModelSpec::comparison().iter().map(ModelSpec::name).collect();
        assert_eq!(names.len(), 4);
    }
}

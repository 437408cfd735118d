//! Run configuration: one JSON document covering every command.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hifis_core::lime::LimeConfig;
use hifis_core::ModelConfig;

use crate::dataset::{read_json, write_json};
use crate::error::{Error, Result};
use crate::eval::{CvConfig, LossChoice};
use crate::features::PipelineConfig;
use crate::synth::SynthConfig;

pub const RUN_CONFIG_FILE: &str = "run_config.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Directory holding `clients.csv` and `events.csv`.
    pub raw_dir: PathBuf,
    /// Directory holding the preprocessed dataset and its sidecar.
    pub dataset_dir: PathBuf,
    pub checkpoint: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            raw_dir: "raw".into(),
            dataset_dir: "dataset".into(),
            checkpoint: PathBuf::from("model").join("checkpoint.json"),
            out_dir: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PickConfig {
    pub budget: usize,
    /// Share of the training and validation examples explained for the pick.
    pub pool_fraction: f64,
    /// Upper bound on the pool size.
    pub pool_cap: Option<usize>,
    /// Entries drawn in the global chart.
    pub chart_entries: usize,
}

impl Default for PickConfig {
    fn default() -> Self {
        Self { budget: 15, pool_fraction: 0.2, pool_cap: None, chart_entries: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub paths: Paths,
    /// Seeds the generator, the network and LIME. Copied into `model.seed`.
    pub seed: u64,
    pub synth: SynthConfig,
    pub pipeline: PipelineConfig,
    pub model: ModelConfig,
    pub loss: LossChoice,
    pub cv: CvConfig,
    pub lime: LimeConfig,
    pub pick: PickConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            paths: Paths::default(),
            seed: 7,
            synth: SynthConfig::default(),
            pipeline: PipelineConfig::default(),
            model: ModelConfig::default(),
            loss: LossChoice::WeightedF1,
            cv: CvConfig::default(),
            lime: LimeConfig::default(),
            pick: PickConfig::default(),
        }
    }
}

impl RunConfig {
    /// Defaults overlaid with the file at `path`, if any.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => read_json(p),
            None => Ok(Self::default()),
        }
    }

    /// Settle derived fields and check ranges.
    pub fn resolve(mut self) -> Result<Self> {
        self.model.seed = self.seed;
        self.pipeline.validate()?;
        let m = &self.model;
        if m.batch_size == 0 || m.max_epochs == 0 || m.lstm_units == 0 {
            return Err(Error::Config("batch_size, max_epochs and lstm_units must be positive".into()));
        }
        if !(0.0..1.0).contains(&m.dropout_rate) {
            return Err(Error::Config(format!("dropout_rate {} is outside [0, 1)", m.dropout_rate)));
        }
        if !(m.threshold > 0.0 && m.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} is outside (0, 1)", m.threshold)));
        }
        if !(self.pick.pool_fraction > 0.0 && self.pick.pool_fraction <= 1.0) {
            return Err(Error::Config(format!("pool_fraction {} is outside (0, 1]", self.pick.pool_fraction)));
        }
        if self.lime.sample_size < 2 || self.lime.num_features == 0 {
            return Err(Error::Config("LIME needs a sample size of at least 2 and at least one feature".into()));
        }
        Ok(self)
    }

    /// Write the resolved configuration into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(RUN_CONFIG_FILE);
        write_json(&path, self)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"seed": 3, "model": {"max_epochs": 5}, "pick": {"budget": 4}}"#).unwrap();
        let c = RunConfig::load(Some(&p)).unwrap().resolve().unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.model.seed, 3);
        assert_eq!(c.model.max_epochs, 5);
        assert_eq!(c.model.batch_size, ModelConfig::default().batch_size);
        assert_eq!(c.pick.budget, 4);
        assert_eq!(c.pick.pool_fraction, 0.2);
        assert_eq!(c.cv.folds, 10);
    }

    #[test]
    fn written_config_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig::default().resolve().unwrap();
        let p = c.write_to(dir.path()).unwrap();
        assert_eq!(RunConfig::load(Some(&p)).unwrap(), c);
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let mut c = RunConfig::default();
        c.model.dropout_rate = 1.0;
        assert!(c.resolve().is_err());
        let mut c = RunConfig::default();
        c.pick.pool_fraction = 0.0;
        assert!(c.resolve().is_err());
    }
}

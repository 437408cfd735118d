//! Labeled, encoded examples on a shared 30-day grid, with temporal splits
//! and standardization.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use hifis_core::folds::{rolling_origin_split, FoldSpec, Split};
use hifis_core::scaler::StandardScaler;

use crate::error::{Error, Result};
use crate::features::{check_numeric_names, encode, ClientTimeline, PipelineConfig};
use crate::records::{date_from_day, day_number, RecordSet, DATE_FORMAT};
use crate::schema::FeatureSchema;

pub const DATASET_FILE: &str = "dataset.csv";
pub const SIDECAR_FILE: &str = "dataset.json";

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub client_id: u64,
    /// Last day of the current time step.
    pub date: NaiveDate,
    pub x: Vec<f64>,
    pub y: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub pipeline: PipelineConfig,
    /// Sorted by `(date, client_id)`.
    pub examples: Vec<Example>,
    pub scaler: Option<StandardScaler>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    schema: FeatureSchema,
    schema_hash: String,
    pipeline: PipelineConfig,
    scaler: Option<StandardScaler>,
    examples: usize,
    positives: usize,
}

/// Grid dates `anchor + k·step` on which `first_day ≤ date ≤ last_day`.
pub fn grid_dates(anchor: i64, step: i64, first_day: i64, last_day: i64) -> Vec<i64> {
    if last_day < first_day {
        return Vec::new();
    }
    let k0 = (first_day - anchor).max(0).div_euclid(step) + i64::from((first_day - anchor).max(0).rem_euclid(step) != 0);
    (k0..).map(|k| anchor + k * step).take_while(|&d| d <= last_day).collect()
}

/// Build one example per client and grid date from the client's first
/// record up to `horizon_days` before the end of the data.
pub fn build_dataset(rs: &RecordSet, schema: &FeatureSchema, pipeline: &PipelineConfig) -> Result<Dataset> {
    pipeline.validate()?;
    schema.validate()?;
    check_numeric_names(schema)?;
    let schema = schema.clone().with_steps(pipeline.sequence_length, pipeline.step_days);
    let mut ds = Dataset { schema, pipeline: pipeline.clone(), examples: Vec::new(), scaler: None };
    let (Some(anchor), Some(data_end)) = (rs.events.iter().map(|e| day_number(e.start.date())).min(), rs.data_end) else {
        return Ok(ds);
    };
    let last_day = day_number(data_end) - pipeline.horizon_days;
    let rule = pipeline.rule();
    let by_client = rs.events_by_client();
    for client in &rs.clients {
        let Some(events) = by_client.get(&client.client_id) else { continue };
        let timeline = ClientTimeline::new(events.iter().copied(), pipeline.min_stay_minutes);
        let first = timeline.first_day().expect("client has events");
        for day in grid_dates(anchor, pipeline.step_days, first, last_day) {
            let date = date_from_day(day);
            let y = u8::from(timeline.is_chronic(day + pipeline.horizon_days, &rule));
            ds.examples.push(Example { client_id: client.client_id, date, x: encode(client, &timeline, date, &ds.schema), y });
        }
    }
    ds.examples.sort_by_key(|e| (e.date, e.client_id));
    Ok(ds)
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn width(&self) -> usize {
        self.schema.width()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().map(|e| usize::from(e.y)).sum()
    }

    pub fn positive_rate(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.positives() as f64 / self.len() as f64
        }
    }

    /// Date of every example, in example order (with repeats).
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.examples.iter().map(|e| e.date).collect()
    }

    pub fn steps(&self) -> usize {
        let mut d = self.dates();
        d.dedup();
        d.len()
    }

    /// Train/validation/test indices for fold `fold` (1-based).
    pub fn partition(&self, fold: usize, spec: FoldSpec) -> Result<Split> {
        Ok(rolling_origin_split(&self.dates(), fold, spec)?)
    }

    /// Row-major rows and labels for `indices`, unscaled.
    pub fn matrix(&self, indices: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(indices.len() * self.width());
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(&self.examples[i].x);
            y.push(f64::from(self.examples[i].y));
        }
        (x, y)
    }

    /// Fit standardization on the rows in `train` only.
    pub fn fit_scaler(&self, train: &[usize]) -> Result<StandardScaler> {
        let (x, _) = self.matrix(train);
        Ok(StandardScaler::fit(&x, self.width(), &self.schema.scaled_columns())?)
    }

    pub fn find(&self, client_id: u64, date: NaiveDate) -> Option<usize> {
        self.examples.binary_search_by_key(&(date, client_id), |e| (e.date, e.client_id)).ok()
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(DATASET_FILE);
        let csv_err = |source| Error::Csv { file: DATASET_FILE.into(), source };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        let mut header = vec!["ClientID".to_string(), "Date".into(), "y".into()];
        header.extend(self.schema.feature_names());
        w.write_record(&header).map_err(csv_err)?;
        for e in &self.examples {
            let mut row = vec![e.client_id.to_string(), e.date.format(DATE_FORMAT).to_string(), e.y.to_string()];
            row.extend(e.x.iter().map(f64::to_string));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let sidecar = Sidecar {
            schema: self.schema.clone(),
            schema_hash: self.schema.hash(),
            pipeline: self.pipeline.clone(),
            scaler: self.scaler.clone(),
            examples: self.len(),
            positives: self.positives(),
        };
        write_json(&dir.join(SIDECAR_FILE), &sidecar)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let sidecar: Sidecar = read_json(&dir.join(SIDECAR_FILE))?;
        let schema = sidecar.schema;
        let path = dir.join(DATASET_FILE);
        let csv_err = |source| Error::Csv { file: DATASET_FILE.into(), source };
        let mut r = csv::Reader::from_path(&path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.clone();
        let names = schema.feature_names();
        let expected = ["ClientID", "Date", "y"].into_iter().chain(names.iter().map(String::as_str));
        if !headers.iter().eq(expected) {
            return Err(Error::Row {
                file: DATASET_FILE.into(),
                line: 1,
                column: String::new(),
                message: "header does not match the sidecar schema".into(),
            });
        }
        let mut examples = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            let err = |column: &str, message: String| Error::Row { file: DATASET_FILE.into(), line, column: column.into(), message };
            let client_id = rec[0].parse().map_err(|e| err("ClientID", format!("{e}")))?;
            let date = NaiveDate::parse_from_str(&rec[1], DATE_FORMAT).map_err(|e| err("Date", e.to_string()))?;
            let y = match &rec[2] {
                "0" => 0,
                "1" => 1,
                other => return Err(err("y", format!("expected 0 or 1, got {other:?}"))),
            };
            let x = rec
                .iter()
                .skip(3)
                .zip(&names)
                .map(|(v, n)| v.parse::<f64>().map_err(|e| err(n, e.to_string())))
                .collect::<Result<Vec<f64>>>()?;
            examples.push(Example { client_id, date, x, y });
        }
        Ok(Dataset { schema, pipeline: sidecar.pipeline, examples, scaler: sidecar.scaler })
    }

    /// Client counts per grid date, for reporting.
    pub fn examples_per_date(&self) -> BTreeMap<NaiveDate, usize> {
        let mut m = BTreeMap::new();
        for e in &self.examples {
            *m.entry(e.date).or_default() += 1;
        }
        m
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value).map_err(|e| Error::json(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::json(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_dates_brute_force() {
        for anchor in [-5i64, 0, 7] {
            for first in -10..80 {
                for last in -10..130 {
                    let want: Vec<i64> = (0..10).map(|k| anchor + 30 * k).filter(|&d| d >= first && d <= last).collect();
                    assert_eq!(grid_dates(anchor, 30, first.max(anchor), last), want, "{anchor} {first} {last}");
                }
            }
        }
    }
}

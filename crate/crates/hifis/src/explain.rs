//! LIME explanations of single predictions and the submodular pick that
//! summarizes a pool of them.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use chrono::NaiveDate;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use hifis_core::lime::{explain_instance, submodular_pick, Contribution, FeatureKind, InterpretableFeature, LimeConfig, TabularStats};
use hifis_core::net::predict_proba;
use hifis_core::scaler::StandardScaler;
use hifis_core::ModelParams;

use crate::dataset::{read_json, write_json, Dataset};
use crate::error::{Error, Result};
use crate::records::day_number;
use crate::schema::FeatureSchema;
use crate::svg;

/// One interpretable feature per numeric column, SVCF group and MVCF bit.
pub fn interpretable_features(schema: &FeatureSchema) -> Vec<InterpretableFeature> {
    let mut out: Vec<InterpretableFeature> = schema
        .numeric_static
        .iter()
        .enumerate()
        .map(|(i, n)| InterpretableFeature { name: n.clone(), kind: FeatureKind::Numeric { column: i } })
        .collect();
    let mut offset = schema.svcf_offset();
    for d in &schema.svcf {
        let columns = (offset..offset + d.values.len()).collect();
        out.push(InterpretableFeature { name: d.name.clone(), kind: FeatureKind::OneHot { columns, labels: d.values.clone() } });
        offset += d.values.len();
    }
    for d in &schema.mvcf {
        for (k, v) in d.values.iter().enumerate() {
            out.push(InterpretableFeature { name: format!("{}_{}", d.name, v), kind: FeatureKind::Flag { column: offset + k } });
        }
        offset += d.values.len();
    }
    for t in 0..schema.sequence_length {
        for (s, &service) in schema.dynamic_services.iter().enumerate() {
            out.push(InterpretableFeature {
                name: schema.dynamic_name(t, service),
                kind: FeatureKind::Numeric { column: schema.dynamic_column(t, s) },
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub client_id: u64,
    pub date: NaiveDate,
    /// Sorted by descending `|weight|`.
    pub entries: Vec<Contribution>,
    pub intercept: f64,
    pub local_fidelity_r2: f64,
    pub predicted_probability: f64,
    pub seed: u64,
}

impl Explanation {
    pub fn bars(&self) -> Vec<(String, f64)> {
        self.entries.iter().map(|c| (c.statement.clone(), c.weight)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalEntry {
    pub statement: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceId {
    pub client_id: u64,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalExplanation {
    /// Mean signed weight per statement over the picked explanations,
    /// sorted by descending `|weight|`.
    pub entries: Vec<GlobalEntry>,
    pub picked_instance_ids: Vec<InstanceId>,
    pub coverage: f64,
    pub pool_size: usize,
}

impl GlobalExplanation {
    pub fn bars(&self, limit: usize) -> Vec<(String, f64)> {
        self.entries.iter().take(limit).map(|e| (e.statement.clone(), e.weight)).collect()
    }

    pub fn save(&self, dir: &Path, limit: usize) -> Result<()> {
        write_json(&dir.join("global_explanation.json"), self)?;
        let chart = svg::bar_chart("Submodular pick: mean LIME weight", &self.bars(limit));
        std::fs::write(dir.join("global_explanation.svg"), chart).map_err(|e| Error::io(dir.join("global_explanation.svg"), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Statement weights averaged over `picked`, an absent statement counting as zero.
pub fn aggregate(picked: &[&Explanation]) -> Vec<GlobalEntry> {
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for e in picked {
        for c in &e.entries {
            *sums.entry(c.statement.as_str()).or_default() += c.weight;
        }
    }
    let n = picked.len().max(1) as f64;
    let mut entries: Vec<GlobalEntry> = sums.into_iter().map(|(s, w)| GlobalEntry { statement: s.to_string(), weight: w / n }).collect();
    entries.sort_by(|a, b| b.weight.abs().total_cmp(&a.weight.abs()).then_with(|| a.statement.cmp(&b.statement)));
    entries
}

/// Seed of the random stream used for one instance, so explanations do not
/// depend on the order in which instances are processed.
pub fn instance_seed(seed: u64, client_id: u64, date: NaiveDate) -> u64 {
    let day = day_number(date) as u64;
    let mut z = seed ^ client_id.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ day.wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A trained model with the statistics LIME needs to perturb raw rows.
#[derive(Debug, Clone)]
pub struct Explainer<'a> {
    pub params: &'a ModelParams,
    pub scaler: &'a StandardScaler,
    pub stats: TabularStats,
    pub cfg: LimeConfig,
}

impl<'a> Explainer<'a> {
    /// `train_rows` are unscaled rows of the model's training set.
    pub fn new(params: &'a ModelParams, scaler: &'a StandardScaler, schema: &FeatureSchema, train_rows: &[f64], cfg: LimeConfig) -> Result<Self> {
        let stats = TabularStats::fit(train_rows, schema.width(), interpretable_features(schema))?;
        Ok(Self { params, scaler, stats, cfg })
    }

    /// Model probabilities for unscaled rows.
    pub fn predict(&self, rows: &[f64]) -> Result<Vec<f64>> {
        Ok(self.black_box(rows)?)
    }

    fn black_box(&self, rows: &[f64]) -> hifis_core::Result<Vec<f64>> {
        let mut x = rows.to_vec();
        self.scaler.transform(&mut x, self.stats.width());
        predict_proba(self.params, &x)
    }

    pub fn explain(&self, client_id: u64, date: NaiveDate, row: &[f64], seed: u64) -> Result<Explanation> {
        let seed = instance_seed(seed, client_id, date);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let started = Instant::now();
        let local = explain_instance(&self.stats, |rows: &[f64]| self.black_box(rows), row, &self.cfg, &mut rng)?;
        log::debug!("explained client {client_id} at {date} in {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
        Ok(Explanation {
            client_id,
            date,
            entries: local.entries,
            intercept: local.intercept,
            local_fidelity_r2: local.r2,
            predicted_probability: local.prediction,
            seed,
        })
    }

    /// Explain the dataset example `index`.
    pub fn explain_example(&self, ds: &Dataset, index: usize, seed: u64) -> Result<Explanation> {
        let e = &ds.examples[index];
        self.explain(e.client_id, e.date, &e.x, seed)
    }

    /// Explain every pooled example and greedily pick `budget` of them.
    pub fn pick(&self, ds: &Dataset, pool: &[usize], budget: usize, seed: u64) -> Result<(GlobalExplanation, Vec<Explanation>)> {
        if pool.is_empty() {
            return Err(Error::Config("the pick pool is empty".into()));
        }
        if budget == 0 {
            return Err(Error::Config("the pick budget must be at least 1".into()));
        }
        if budget > pool.len() {
            log::warn!("pick budget {budget} exceeds the pool of {}; picking every instance", pool.len());
        }
        let started = Instant::now();
        let explanations = pool.iter().map(|&i| self.explain_example(ds, i, seed)).collect::<Result<Vec<_>>>()?;
        log::info!("explained {} pooled instances in {:.1} s", pool.len(), started.elapsed().as_secs_f64());
        let m = self.stats.n_features();
        let w: Vec<f64> = explanations
            .iter()
            .flat_map(|e| {
                let mut row = vec![0.0; m];
                for c in &e.entries {
                    row[c.feature] = c.weight;
                }
                row
            })
            .collect();
        let pick = submodular_pick(&w, explanations.len(), m, budget);
        let picked: Vec<&Explanation> = pick.selected.iter().map(|&i| &explanations[i]).collect();
        let global = GlobalExplanation {
            entries: aggregate(&picked),
            picked_instance_ids: picked.iter().map(|e| InstanceId { client_id: e.client_id, date: e.date }).collect(),
            coverage: pick.coverage,
            pool_size: pool.len(),
        };
        Ok((global, explanations))
    }
}

/// A seeded random subset of `candidates`: `fraction` of them, at most `cap`.
pub fn pick_pool(candidates: &[usize], fraction: f64, cap: Option<usize>, seed: u64) -> Vec<usize> {
    let mut n = (candidates.len() as f64 * fraction).round() as usize;
    n = n.clamp(usize::from(!candidates.is_empty()), candidates.len());
    if let Some(c) = cap {
        n = n.min(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = sample(&mut rng, candidates.len(), n).into_iter().map(|i| candidates[i]).collect();
    chosen.sort_unstable();
    chosen
}

pub fn save_explanation(dir: &Path, e: &Explanation) -> Result<()> {
    let stem = format!("explanation_{}_{}", e.client_id, e.date);
    write_json(&dir.join(format!("{stem}.json")), e)?;
    let title = format!("Client {} on {} (p = {:.3})", e.client_id, e.date, e.predicted_probability);
    let path = dir.join(format!("{stem}.svg"));
    std::fs::write(&path, svg::bar_chart(&title, &e.bars())).map_err(|err| Error::io(&path, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn features_cover_every_column_once() {
        let schema = FeatureSchema::default();
        let mut seen = vec![0usize; schema.width()];
        for f in interpretable_features(&schema) {
            match f.kind {
                FeatureKind::Numeric { column } | FeatureKind::Flag { column } => seen[column] += 1,
                FeatureKind::OneHot { columns, .. } => columns.iter().for_each(|&c| seen[c] += 1),
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn aggregate_averages_with_absent_as_zero() {
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let mk = |entries: Vec<(&str, f64)>| Explanation {
            client_id: 1,
            date: d,
            entries: entries.into_iter().enumerate().map(|(i, (s, w))| Contribution { feature: i, statement: s.into(), weight: w }).collect(),
            intercept: 0.0,
            local_fidelity_r2: 1.0,
            predicted_probability: 0.5,
            seed: 0,
        };
        let a = mk(vec![("A", 0.4), ("B", -0.2)]);
        let b = mk(vec![("A", 0.2), ("C", 0.9)]);
        let g = aggregate(&[&a, &b]);
        let got: Vec<(&str, f64)> = g.iter().map(|e| (e.statement.as_str(), e.weight)).collect();
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].0, "C");
        assert!((got[0].1 - 0.45).abs() < 1e-12);
        assert!((got[1].1 - 0.3).abs() < 1e-12);
        assert!((got[2].1 + 0.1).abs() < 1e-12);
    }

    #[test]
    fn instance_seeds_differ_by_client_and_date() {
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let d2 = NaiveDate::from_ymd_opt(2020, 1, 31).unwrap();
        assert_ne!(instance_seed(1, 5, d), instance_seed(1, 6, d));
        assert_ne!(instance_seed(1, 5, d), instance_seed(1, 5, d2));
        assert_ne!(instance_seed(1, 5, d), instance_seed(2, 5, d));
        assert_eq!(instance_seed(1, 5, d), instance_seed(1, 5, d));
    }

    #[test]
    fn pool_is_a_sorted_subset() {
        let cands: Vec<usize> = (100..200).collect();
        let p = pick_pool(&cands, 0.2, None, 3);
        assert_eq!(p.len(), 20);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert!(p.iter().all(|i| cands.contains(i)));
        assert_eq!(pick_pool(&cands, 0.2, Some(7), 3).len(), 7);
        assert_eq!(pick_pool(&cands, 0.2, None, 3), p);
        assert!(pick_pool(&[], 0.2, None, 3).is_empty());
    }
}

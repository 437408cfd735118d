//! Per-client counts, static attributes and row encoding.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use hifis_core::activity::{count_sorted_in, ChronicRule, StayDays, Visit, MINUTES_PER_DAY};

use crate::error::{Error, Result};
use crate::records::{day_number, minute_number, ClientAttributes, Counting, ServiceEvent, ServiceType};
use crate::schema::{CategoricalDomain, FeatureSchema, UNKNOWN};

/// Labeling and windowing knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub step_days: i64,
    pub sequence_length: usize,
    pub horizon_days: i64,
    pub window_days: i64,
    pub stay_threshold: usize,
    pub min_stay_minutes: i64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { step_days: 30, sequence_length: 6, horizon_days: 180, window_days: 365, stay_threshold: 180, min_stay_minutes: 15 }
    }
}

impl PipelineConfig {
    pub fn rule(&self) -> ChronicRule {
        ChronicRule { min_stay_minutes: self.min_stay_minutes, window_days: self.window_days, threshold: self.stay_threshold }
    }

    pub fn validate(&self) -> Result<()> {
        if self.step_days <= 0 || self.sequence_length == 0 || self.horizon_days < 0 || self.window_days <= 0 {
            return Err(Error::Config("step, sequence, horizon and window lengths must be positive".into()));
        }
        Ok(())
    }
}

/// Sorted day numbers that each service contributes to counts.
#[derive(Debug, Clone, Default)]
pub struct ClientTimeline {
    first_day: Option<i64>,
    units: BTreeMap<ServiceType, Vec<i64>>,
}

impl ClientTimeline {
    pub fn new<'a, I>(events: I, min_stay_minutes: i64) -> Self
    where
        I: IntoIterator<Item = &'a ServiceEvent>,
    {
        let mut visits = Vec::new();
        let mut units: BTreeMap<ServiceType, Vec<i64>> = BTreeMap::new();
        let mut first_day: Option<i64> = None;
        for e in events {
            let start = minute_number(e.start);
            let end = minute_number(e.end);
            let start_day = start.div_euclid(MINUTES_PER_DAY);
            first_day = Some(first_day.map_or(start_day, |d| d.min(start_day)));
            match e.service.counting() {
                Counting::StayDays => visits.push(Visit { start, end }),
                Counting::CoveredDays => {
                    let last_day = (end - 1).max(start).div_euclid(MINUTES_PER_DAY);
                    units.entry(e.service).or_default().extend(start_day..=last_day);
                }
                Counting::Events => units.entry(e.service).or_default().push(start_day),
            }
        }
        for (service, days) in units.iter_mut() {
            days.sort_unstable();
            if service.counting() == Counting::CoveredDays {
                days.dedup();
            }
        }
        let stays = StayDays::from_visits(&visits, min_stay_minutes);
        units.insert(ServiceType::Stay, stays.days().to_vec());
        Self { first_day, units }
    }

    /// Day of the client's earliest event.
    pub fn first_day(&self) -> Option<i64> {
        self.first_day
    }

    fn days(&self, service: ServiceType) -> &[i64] {
        self.units.get(&service).map_or(&[], Vec::as_slice)
    }

    /// Count in `(window_end - window_days, window_end]`.
    pub fn count(&self, service: ServiceType, window_end: i64, window_days: i64) -> usize {
        count_sorted_in(self.days(service), window_end, window_days)
    }

    /// Count on or before `day`.
    pub fn total_until(&self, service: ServiceType, day: i64) -> usize {
        self.days(service).partition_point(|&d| d <= day)
    }

    pub fn is_chronic(&self, as_of: i64, rule: &ChronicRule) -> bool {
        self.count(ServiceType::Stay, as_of, rule.window_days) >= rule.threshold
    }
}

/// `T × S` counts, row `t` covering the step ending `t` steps before `day`.
pub fn dynamic_features(timeline: &ClientTimeline, day: i64, schema: &FeatureSchema) -> Vec<f64> {
    let mut out = Vec::with_capacity(schema.sequence_length * schema.dynamic_services.len());
    for t in 0..schema.sequence_length {
        let end = day - schema.step_days * t as i64;
        out.extend(schema.dynamic_services.iter().map(|&s| timeline.count(s, end, schema.step_days) as f64));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImputeKind {
    /// Missing means zero.
    Numeric,
    /// Missing is flagged with -1.
    Sentinel,
}

pub fn impute(value: Option<f64>, kind: ImputeKind) -> f64 {
    match (value, kind) {
        (Some(v), _) => v,
        (None, ImputeKind::Numeric) => 0.0,
        (None, ImputeKind::Sentinel) => -1.0,
    }
}

/// Whole years between `birth` and `on`.
pub fn age_in_years(birth: NaiveDate, on: NaiveDate) -> u32 {
    on.years_since(birth).unwrap_or(0)
}

fn service_by_total_name(name: &str) -> Option<ServiceType> {
    name.strip_prefix("Total_").and_then(|s| s.parse().ok())
}

/// Check that every numeric static name is computable.
pub fn check_numeric_names(schema: &FeatureSchema) -> Result<()> {
    for n in &schema.numeric_static {
        let known = matches!(n.as_str(), "CurrentAge" | "ClientWeightKG" | "IncomeAmount" | "ExpenseAmount" | "TotalScore")
            || service_by_total_name(n).is_some();
        if !known {
            return Err(Error::Config(format!("no rule computes numeric feature {n:?}")));
        }
    }
    Ok(())
}

/// Numeric statics as of `date`, in schema order.
pub fn static_features(client: &ClientAttributes, timeline: &ClientTimeline, date: NaiveDate, schema: &FeatureSchema) -> Vec<f64> {
    let day = day_number(date);
    schema
        .numeric_static
        .iter()
        .map(|name| match name.as_str() {
            "CurrentAge" => f64::from(age_in_years(client.birth_date, date)),
            "ClientWeightKG" => impute(client.weight_kg, ImputeKind::Sentinel),
            "IncomeAmount" => impute(client.monthly_income, ImputeKind::Numeric),
            "ExpenseAmount" => impute(client.monthly_expense, ImputeKind::Numeric),
            "TotalScore" => {
                let assessed = timeline.total_until(ServiceType::Spdat, day) > 0;
                impute(client.latest_spdat_score.filter(|_| assessed).map(f64::from), ImputeKind::Sentinel)
            }
            other => service_by_total_name(other).map_or(0.0, |s| timeline.total_until(s, day) as f64),
        })
        .collect()
}

/// Index of an SVCF value, falling back to "Unknown".
pub fn svcf_index(domain: &CategoricalDomain, value: Option<&str>) -> (usize, bool) {
    let unknown = domain.index_of(UNKNOWN).expect("validated schema");
    match value {
        None => (unknown, true),
        Some(v) => domain.index_of(v).map_or((unknown, false), |i| (i, true)),
    }
}

/// SVCF one-hots followed by MVCF bits. Out-of-domain values are logged.
pub fn categorical_block(client: &ClientAttributes, schema: &FeatureSchema) -> Vec<f64> {
    let mut out = Vec::with_capacity(schema.static_len() - schema.numeric_len());
    for d in &schema.svcf {
        let value = client.svcf.get(&d.name).map(String::as_str);
        let (idx, ok) = svcf_index(d, value);
        if !ok {
            log::warn!("client {}: {} value {:?} not in schema, using {UNKNOWN}", client.client_id, d.name, value.unwrap_or(""));
        }
        out.extend((0..d.values.len()).map(|i| if i == idx { 1.0 } else { 0.0 }));
    }
    for d in &schema.mvcf {
        let start = out.len();
        out.resize(start + d.values.len(), 0.0);
        for v in client.mvcf.get(&d.name).into_iter().flatten() {
            match d.index_of(v) {
                Some(i) => out[start + i] = 1.0,
                None => log::warn!("client {}: {} value {v:?} not in schema, ignored", client.client_id, d.name),
            }
        }
    }
    out
}

/// Full encoded row for `client` at `date`.
pub fn encode(client: &ClientAttributes, timeline: &ClientTimeline, date: NaiveDate, schema: &FeatureSchema) -> Vec<f64> {
    let mut row = static_features(client, timeline, date, schema);
    row.extend(categorical_block(client, schema));
    row.extend(dynamic_features(timeline, day_number(date), schema));
    row
}

pub type Categoricals = (BTreeMap<String, String>, BTreeMap<String, BTreeSet<String>>);

/// Recover categorical assignments from an encoded row.
pub fn decode_categoricals(row: &[f64], schema: &FeatureSchema) -> Categoricals {
    let mut svcf = BTreeMap::new();
    let mut offset = schema.svcf_offset();
    for d in &schema.svcf {
        if let Some(i) = (0..d.values.len()).find(|&i| row[offset + i] > 0.5) {
            svcf.insert(d.name.clone(), d.values[i].clone());
        }
        offset += d.values.len();
    }
    let mut mvcf = BTreeMap::new();
    for d in &schema.mvcf {
        let set: BTreeSet<String> = (0..d.values.len()).filter(|&i| row[offset + i] > 0.5).map(|i| d.values[i].clone()).collect();
        if !set.is_empty() {
            mvcf.insert(d.name.clone(), set);
        }
        offset += d.values.len();
    }
    (svcf, mvcf)
}

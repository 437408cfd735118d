//! Synthetic client populations with a planted chronic-risk pattern.
//!
//! Clients belong to one of three latent classes. High-risk clients enter a
//! long run of near-nightly shelter stays, are mostly older than 52 and
//! mostly never receive a housing subsidy. Episodic clients show the same
//! nightly pattern for a few months only, are mostly younger and usually
//! subsidized. Everyone else uses shelters sporadically. The high-risk share
//! is calibrated on a pilot population so the labeled positive rate lands on
//! the requested target.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::grid_dates;
use crate::error::{Error, Result};
use crate::features::{ClientTimeline, PipelineConfig};
use crate::records::{day_number, ClientAttributes, RecordSet, ServiceEvent, ServiceType};
use crate::schema::{FeatureSchema, UNKNOWN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub clients: usize,
    pub start_date: NaiveDate,
    pub span_days: i64,
    /// Fraction of labeled examples that should be positive.
    pub target_positive_rate: f64,
    /// Probability that a high-risk client follows each planted attribute
    /// (age above 52, no housing subsidy), and that an episodic client
    /// follows the opposite.
    pub rule_strength: f64,
    /// Share of non-high-risk clients that are episodic.
    pub episodic_fraction: f64,
    pub high_risk_stay_rate: f64,
    pub episodic_stay_rate: f64,
    /// Upper bound of the sporadic daily stay probability.
    pub background_stay_rate: f64,
    /// Probability that a shelter visit is too short to count as a stay.
    pub short_visit_rate: f64,
    /// Pilot clients per class used to calibrate the high-risk share.
    pub pilot_clients: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            clients: 3000,
            start_date: NaiveDate::from_ymd_opt(2017, 1, 1).unwrap(),
            span_days: 730,
            target_positive_rate: 0.065,
            rule_strength: 0.9,
            episodic_fraction: 0.3,
            high_risk_stay_rate: 0.85,
            episodic_stay_rate: 0.8,
            background_stay_rate: 0.06,
            short_visit_rate: 0.05,
            pilot_clients: 800,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatentClass {
    HighRisk,
    Episodic,
    Background,
}

/// A generated population with the latent class of every client.
#[derive(Debug, Clone)]
pub struct SyntheticPopulation {
    pub records: RecordSet,
    pub classes: BTreeMap<u64, LatentClass>,
    pub high_risk_share: f64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.target_positive_rate > 0.0 && self.target_positive_rate < 1.0) {
            return Err(Error::Config(format!("target positive rate {} must lie in (0, 1)", self.target_positive_rate)));
        }
        if !unit(self.rule_strength)
            || !unit(self.episodic_fraction)
            || !unit(self.high_risk_stay_rate)
            || !unit(self.episodic_stay_rate)
            || !unit(self.background_stay_rate)
            || !unit(self.short_visit_rate)
        {
            return Err(Error::Config("rates and rule strength must lie in [0, 1]".into()));
        }
        if self.span_days < 400 {
            return Err(Error::Config("span must be at least 400 days to leave labelable dates".into()));
        }
        if self.pilot_clients == 0 {
            return Err(Error::Config("pilot population must be nonempty".into()));
        }
        Ok(())
    }
}

struct Generator<'a> {
    cfg: &'a SynthConfig,
    schema: &'a FeatureSchema,
    start: NaiveDateTime,
}

fn interval(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> i64 {
    if hi <= lo {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

impl Generator<'_> {
    fn at(&self, day: i64, minute: i64) -> NaiveDateTime {
        self.start + Duration::minutes(day * 1440 + minute)
    }

    fn push(&self, out: &mut Vec<ServiceEvent>, id: u64, service: ServiceType, day: i64, minute: i64, len: i64) {
        let last = self.at(self.cfg.span_days, 0) - Duration::minutes(1);
        let start = self.at(day, minute);
        if start > last {
            return;
        }
        let end = (start + Duration::minutes(len)).min(last);
        out.push(ServiceEvent { client_id: id, service, start, end });
    }

    fn stay(&self, rng: &mut ChaCha8Rng, out: &mut Vec<ServiceEvent>, id: u64, day: i64) {
        let minute = interval(rng, 17 * 60, 23 * 60);
        let len = if rng.random_bool(self.cfg.short_visit_rate) { interval(rng, 3, 14) } else { interval(rng, 6 * 60, 13 * 60) };
        self.push(out, id, ServiceType::Stay, day, minute, len);
        if rng.random_bool(0.03) {
            self.push(out, id, ServiceType::Stay, day, interval(rng, 9 * 60, 14 * 60), interval(rng, 20, 120));
        }
        if rng.random_bool(0.1) {
            self.push(out, id, ServiceType::Reservations, day, interval(rng, 8 * 60, 16 * 60), 5);
        }
        if rng.random_bool(0.3) {
            self.push(out, id, ServiceType::FoodBank, day, interval(rng, 11 * 60, 13 * 60), 30);
        }
    }

    fn span(&self, rng: &mut ChaCha8Rng, out: &mut Vec<ServiceEvent>, id: u64, service: ServiceType, day: i64, days: i64) {
        let minute = interval(rng, 9 * 60, 16 * 60);
        self.push(out, id, service, day, minute, days * 1440);
    }

    fn client(&self, rng: &mut ChaCha8Rng, id: u64, class: LatentClass) -> (ClientAttributes, Vec<ServiceEvent>) {
        let cfg = self.cfg;
        let strength = cfg.rule_strength;
        let span = cfg.span_days;
        let entry = interval(rng, 0, span - 220);
        let leave = match class {
            LatentClass::HighRisk => span,
            _ => (entry + interval(rng, 120, span)).min(span),
        };
        let mut events = Vec::new();

        let age = match class {
            LatentClass::HighRisk if rng.random_bool(strength) => interval(rng, 53, 75),
            LatentClass::Episodic if rng.random_bool(strength) => interval(rng, 18, 45),
            _ => interval(rng, 18, 75),
        };
        let subsidized = match class {
            LatentClass::HighRisk => !rng.random_bool(strength) && rng.random_bool(0.5),
            LatentClass::Episodic => rng.random_bool(strength) || rng.random_bool(0.5),
            LatentClass::Background => rng.random_bool(0.4),
        };

        let (episode_start, episode_end, rate) = match class {
            LatentClass::HighRisk => {
                let s = entry + interval(rng, 0, 20);
                (s, s + interval(rng, 420, 1000), cfg.high_risk_stay_rate)
            }
            LatentClass::Episodic => {
                let s = entry + interval(rng, 0, 60);
                (s, s + interval(rng, 60, 180), cfg.episodic_stay_rate)
            }
            LatentClass::Background => (0, 0, 0.0),
        };
        let background = rng.random_range(0.0..=cfg.background_stay_rate);
        for day in entry..leave {
            let p = if (episode_start..episode_end).contains(&day) { rate } else { background };
            if rng.random_bool(p) {
                self.stay(rng, &mut events, id, day);
            } else if rng.random_bool(0.02) {
                self.push(&mut events, id, ServiceType::FoodBank, day, interval(rng, 11 * 60, 13 * 60), 30);
            }
            if rng.random_bool(if class == LatentClass::Background { 0.005 } else { 0.015 }) {
                self.push(&mut events, id, ServiceType::Turnaways, day, interval(rng, 18 * 60, 23 * 60), 5);
            }
            if rng.random_bool(0.02) {
                self.push(&mut events, id, ServiceType::GoodsAndServices, day, interval(rng, 10 * 60, 16 * 60), 20);
            }
        }
        // make sure the entry day carries a record
        self.push(&mut events, id, ServiceType::GoodsAndServices, entry, interval(rng, 9 * 60, 11 * 60), 15);

        if subsidized {
            let from = entry + interval(rng, 0, 45);
            let len = interval(rng, 120, 500);
            self.span(rng, &mut events, id, ServiceType::HousingSubsidy, from, len);
        }
        let case_mgmt = if class == LatentClass::Background { 0.2 } else { 0.5 };
        if rng.random_bool(case_mgmt) {
            let from = interval(rng, entry, leave - 1);
            let len = interval(rng, 30, 200);
            self.span(rng, &mut events, id, ServiceType::CaseManagement, from, len);
        }
        let housing = match class {
            LatentClass::HighRisk => 0.05,
            LatentClass::Episodic => 0.3,
            LatentClass::Background => 0.15,
        };
        if rng.random_bool(housing) {
            let from = if class == LatentClass::Episodic { episode_end } else { interval(rng, entry, leave - 1) };
            let len = interval(rng, 60, 300);
            self.span(rng, &mut events, id, ServiceType::Housing, from, len);
        }
        if rng.random_bool(0.1) {
            let from = interval(rng, entry, leave - 1);
            let len = interval(rng, 10, 90);
            self.span(rng, &mut events, id, ServiceType::Storage, from, len);
        }
        let assessments = interval(rng, 0, 3);
        for _ in 0..assessments {
            let day = interval(rng, entry, leave - 1);
            self.push(&mut events, id, ServiceType::Spdat, day, interval(rng, 9 * 60, 16 * 60), 60);
        }

        let birth = self.start.date() - Duration::days(age * 365 + interval(rng, 0, 364));
        let mut c = ClientAttributes::new(id, birth);
        c.weight_kg = rng.random_bool(0.8).then(|| (rng.random_range(45.0..120.0f64) * 10.0).round() / 10.0);
        c.monthly_income = rng.random_bool(0.85).then(|| (rng.random_range(0.0..2500.0f64)).round());
        c.monthly_expense = rng.random_bool(0.7).then(|| (rng.random_range(0.0..1500.0f64)).round());
        if assessments > 0 {
            let (lo, hi) = match class {
                LatentClass::HighRisk => (5, 12),
                LatentClass::Episodic => (3, 10),
                LatentClass::Background => (0, 8),
            };
            c.latest_spdat_score = Some(interval(rng, lo, hi) as u8);
        }
        for d in &self.schema.svcf {
            if rng.random_bool(0.9) {
                let known: Vec<&String> = d.values.iter().filter(|v| *v != UNKNOWN).collect();
                if let Some(v) = known.choose(rng) {
                    c.svcf.insert(d.name.clone(), (*v).clone());
                }
            }
        }
        for d in &self.schema.mvcf {
            let set: BTreeSet<String> = d.values.iter().filter(|_| rng.random_bool(0.2)).cloned().collect();
            if !set.is_empty() {
                c.mvcf.insert(d.name.clone(), set);
            }
        }
        events.sort_by_key(|e| (e.start, e.service));
        (c, events)
    }
}

struct PilotStats {
    positives: f64,
    examples: f64,
}

fn pilot(gen: &Generator<'_>, pipeline: &PipelineConfig, classes: &[LatentClass], rng: &mut ChaCha8Rng) -> PilotStats {
    let anchor = day_number(gen.start.date());
    let last = anchor + gen.cfg.span_days - 1 - pipeline.horizon_days;
    let rule = pipeline.rule();
    let mut stats = PilotStats { positives: 0.0, examples: 0.0 };
    for (i, &class) in classes.iter().enumerate() {
        let (_, events) = gen.client(rng, i as u64, class);
        let tl = ClientTimeline::new(&events, pipeline.min_stay_minutes);
        let Some(first) = tl.first_day() else { continue };
        for day in grid_dates(anchor, pipeline.step_days, first, last) {
            stats.examples += 1.0;
            stats.positives += f64::from(u8::from(tl.is_chronic(day + pipeline.horizon_days, &rule)));
        }
    }
    stats
}

/// Share of high-risk clients giving the target positive rate, estimated on
/// pilot populations of each class.
fn calibrate(gen: &Generator<'_>, pipeline: &PipelineConfig, seed: u64) -> Result<f64> {
    let cfg = gen.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = cfg.pilot_clients;
    let high = pilot(gen, pipeline, &vec![LatentClass::HighRisk; n], &mut rng);
    let others: Vec<LatentClass> = (0..n)
        .map(|_| if rng.random_bool(cfg.episodic_fraction) { LatentClass::Episodic } else { LatentClass::Background })
        .collect();
    let low = pilot(gen, pipeline, &others, &mut rng);
    let (rh, nh) = (high.positives / n as f64, high.examples / n as f64);
    let (ro, no) = (low.positives / n as f64, low.examples / n as f64);
    let t = cfg.target_positive_rate;
    let denom = (rh - ro) - t * (nh - no);
    let q = (t * no - ro) / denom;
    if !q.is_finite() || !(0.0..=1.0).contains(&q) {
        let reachable = (ro / no, rh / nh);
        return Err(Error::Config(format!(
            "target positive rate {t} is not reachable with this configuration (reachable range about {:.4}..{:.4})",
            reachable.0, reachable.1
        )));
    }
    Ok(q)
}

pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<RecordSet> {
    Ok(generate_population(cfg, seed)?.records)
}

pub fn generate_population(cfg: &SynthConfig, seed: u64) -> Result<SyntheticPopulation> {
    cfg.validate()?;
    let schema = FeatureSchema::default();
    let gen = Generator { cfg, schema: &schema, start: cfg.start_date.and_hms_opt(0, 0, 0).unwrap() };
    if cfg.clients == 0 {
        return Ok(SyntheticPopulation { records: RecordSet::default(), classes: BTreeMap::new(), high_risk_share: 0.0 });
    }
    let q = calibrate(&gen, &PipelineConfig::default(), seed)?;
    log::debug!("calibrated high-risk share {q:.4}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clients = Vec::with_capacity(cfg.clients);
    let mut events = Vec::new();
    let mut classes = BTreeMap::new();
    for i in 0..cfg.clients {
        let id = 100_000 + i as u64;
        let class = if rng.random_bool(q) {
            LatentClass::HighRisk
        } else if rng.random_bool(cfg.episodic_fraction) {
            LatentClass::Episodic
        } else {
            LatentClass::Background
        };
        let (c, ev) = gen.client(&mut rng, id, class);
        clients.push(c);
        events.extend(ev);
        classes.insert(id, class);
    }
    events.sort_by_key(|e| (e.start, e.client_id, e.service));
    Ok(SyntheticPopulation { records: RecordSet::new(clients, events)?, classes, high_risk_share: q })
}

//! Raw client records: attributes, service events and their two-file CSV
//! form.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::FeatureSchema;

pub const CLIENTS_FILE: &str = "clients.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";
pub const DATE_FORMAT: &str = "%Y-%m-%d";

const FIXED_CLIENT_COLUMNS: [&str; 6] = ["ClientID", "BirthDate", "WeightKG", "MonthlyIncome", "MonthlyExpense", "SpdatScore"];
const EVENT_COLUMNS: [&str; 4] = ["ClientID", "ServiceType", "Start", "End"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ServiceType {
    Stay,
    #[serde(rename = "Case Management")]
    CaseManagement,
    Housing,
    #[serde(rename = "Housing Subsidy")]
    HousingSubsidy,
    Storage,
    Reservations,
    Turnaways,
    #[serde(rename = "Food Bank")]
    FoodBank,
    #[serde(rename = "Goods and Services")]
    GoodsAndServices,
    #[serde(rename = "SPDAT")]
    Spdat,
}

/// How events of a service turn into counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counting {
    /// Distinct days with a qualifying visit.
    StayDays,
    /// Calendar days covered by any event.
    CoveredDays,
    /// Number of events, dated by their start.
    Events,
}

impl ServiceType {
    pub const ALL: [ServiceType; 10] = [
        ServiceType::Stay,
        ServiceType::CaseManagement,
        ServiceType::Housing,
        ServiceType::HousingSubsidy,
        ServiceType::Storage,
        ServiceType::Reservations,
        ServiceType::Turnaways,
        ServiceType::FoodBank,
        ServiceType::GoodsAndServices,
        ServiceType::Spdat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ServiceType::Stay => "Stay",
            ServiceType::CaseManagement => "Case Management",
            ServiceType::Housing => "Housing",
            ServiceType::HousingSubsidy => "Housing Subsidy",
            ServiceType::Storage => "Storage",
            ServiceType::Reservations => "Reservations",
            ServiceType::Turnaways => "Turnaways",
            ServiceType::FoodBank => "Food Bank",
            ServiceType::GoodsAndServices => "Goods and Services",
            ServiceType::Spdat => "SPDAT",
        }
    }

    pub fn counting(self) -> Counting {
        match self {
            ServiceType::Stay => Counting::StayDays,
            ServiceType::CaseManagement | ServiceType::Housing | ServiceType::HousingSubsidy | ServiceType::Storage => Counting::CoveredDays,
            _ => Counting::Events,
        }
    }
}

impl fmt::Display for ServiceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ServiceType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ServiceType::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| format!("unknown service type {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientAttributes {
    pub client_id: u64,
    pub birth_date: NaiveDate,
    pub weight_kg: Option<f64>,
    pub monthly_income: Option<f64>,
    pub monthly_expense: Option<f64>,
    /// In `0..=12`; `None` means never assessed.
    pub latest_spdat_score: Option<u8>,
    pub svcf: BTreeMap<String, String>,
    pub mvcf: BTreeMap<String, BTreeSet<String>>,
}

impl ClientAttributes {
    pub fn new(client_id: u64, birth_date: NaiveDate) -> Self {
        Self {
            client_id,
            birth_date,
            weight_kg: None,
            monthly_income: None,
            monthly_expense: None,
            latest_spdat_score: None,
            svcf: BTreeMap::new(),
            mvcf: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceEvent {
    pub client_id: u64,
    pub service: ServiceType,
    pub start: NaiveDateTime,
    pub end: NaiveDateTime,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordSet {
    pub clients: Vec<ClientAttributes>,
    pub events: Vec<ServiceEvent>,
    /// Last observable date: the day the latest event ends.
    pub data_end: Option<NaiveDate>,
}

impl RecordSet {
    /// Validate referential integrity and event ordering.
    pub fn new(clients: Vec<ClientAttributes>, events: Vec<ServiceEvent>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(clients.len());
        for c in &clients {
            if !ids.insert(c.client_id) {
                return Err(Error::DuplicateClient(c.client_id));
            }
            if let Some(s) = c.latest_spdat_score {
                if s > 12 {
                    return Err(Error::Config(format!("client {}: SPDAT score {s} outside 0..=12", c.client_id)));
                }
            }
        }
        for (i, e) in events.iter().enumerate() {
            if !ids.contains(&e.client_id) {
                return Err(Error::UnknownClient { file: EVENTS_FILE.into(), line: i as u64 + 2, client_id: e.client_id });
            }
            if e.end < e.start {
                return Err(Error::Row {
                    file: EVENTS_FILE.into(),
                    line: i as u64 + 2,
                    column: "End".into(),
                    message: "event ends before it starts".into(),
                });
            }
        }
        let data_end = events.iter().map(|e| e.end.date()).max();
        Ok(Self { clients, events, data_end })
    }

    pub fn events_by_client(&self) -> BTreeMap<u64, Vec<&ServiceEvent>> {
        let mut map: BTreeMap<u64, Vec<&ServiceEvent>> = BTreeMap::new();
        for e in &self.events {
            map.entry(e.client_id).or_default().push(e);
        }
        map
    }
}

/// Days since 1970-01-01.
pub fn day_number(d: NaiveDate) -> i64 {
    d.signed_duration_since(NaiveDate::default()).num_days()
}

/// Minutes since 1970-01-01T00:00.
pub fn minute_number(t: NaiveDateTime) -> i64 {
    t.signed_duration_since(NaiveDate::default().and_hms_opt(0, 0, 0).unwrap()).num_minutes()
}

pub fn date_from_day(day: i64) -> NaiveDate {
    NaiveDate::default() + chrono::Duration::days(day)
}

fn csv_err(file: &'static str) -> impl Fn(csv::Error) -> Error {
    move |source| Error::Csv { file: file.to_string(), source }
}

fn fmt_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn save_records(rs: &RecordSet, dir: &Path, schema: &FeatureSchema) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(CLIENTS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(CLIENTS_FILE))?;
    let mut header: Vec<&str> = FIXED_CLIENT_COLUMNS.to_vec();
    header.extend(schema.svcf.iter().map(|d| d.name.as_str()));
    header.extend(schema.mvcf.iter().map(|d| d.name.as_str()));
    w.write_record(&header).map_err(csv_err(CLIENTS_FILE))?;
    for c in &rs.clients {
        let mut row = vec![
            c.client_id.to_string(),
            c.birth_date.format(DATE_FORMAT).to_string(),
            fmt_opt(&c.weight_kg),
            fmt_opt(&c.monthly_income),
            fmt_opt(&c.monthly_expense),
            fmt_opt(&c.latest_spdat_score),
        ];
        row.extend(schema.svcf.iter().map(|d| c.svcf.get(&d.name).cloned().unwrap_or_default()));
        row.extend(schema.mvcf.iter().map(|d| {
            c.mvcf.get(&d.name).map(|set| set.iter().map(String::as_str).collect::<Vec<_>>().join("|")).unwrap_or_default()
        }));
        w.write_record(&row).map_err(csv_err(CLIENTS_FILE))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(EVENTS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(EVENTS_FILE))?;
    w.write_record(EVENT_COLUMNS).map_err(csv_err(EVENTS_FILE))?;
    for e in &rs.events {
        w.write_record([
            e.client_id.to_string(),
            e.service.name().to_string(),
            e.start.format(TIMESTAMP_FORMAT).to_string(),
            e.end.format(TIMESTAMP_FORMAT).to_string(),
        ])
        .map_err(csv_err(EVENTS_FILE))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

struct RowCtx<'a> {
    file: &'static str,
    line: u64,
    record: &'a csv::StringRecord,
}

impl RowCtx<'_> {
    fn err(&self, column: &str, message: impl Into<String>) -> Error {
        Error::Row { file: self.file.into(), line: self.line, column: column.into(), message: message.into() }
    }

    fn cell(&self, idx: usize) -> &str {
        self.record.get(idx).unwrap_or("").trim()
    }

    fn parse<T: FromStr>(&self, idx: usize, column: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.cell(idx).parse().map_err(|e: T::Err| self.err(column, format!("{e}")))
    }

    fn parse_opt<T: FromStr>(&self, idx: usize, column: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if self.cell(idx).is_empty() {
            Ok(None)
        } else {
            self.parse(idx, column).map(Some)
        }
    }
}

fn column_index(headers: &csv::StringRecord, file: &'static str, name: &str) -> Result<usize> {
    headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Row {
        file: file.into(),
        line: 1,
        column: name.into(),
        message: "missing column".into(),
    })
}

fn open(dir: &Path, file: &'static str) -> Result<csv::Reader<File>> {
    let path = dir.join(file);
    let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
    Ok(csv::ReaderBuilder::new().flexible(false).from_reader(f))
}

fn non_negative(ctx: &RowCtx<'_>, v: Option<f64>, column: &str) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x >= 0.0) || !x.is_finite() => Err(ctx.err(column, "expected a non-negative number")),
        other => Ok(other),
    }
}

/// Read `clients.csv` and `events.csv` from `dir`.
pub fn load_records(dir: &Path, schema: &FeatureSchema) -> Result<RecordSet> {

    let mut r = open(dir, CLIENTS_FILE)?;
    let headers = r.headers().map_err(csv_err(CLIENTS_FILE))?.clone();
    let fixed: Vec<usize> =
        FIXED_CLIENT_COLUMNS.iter().map(|c| column_index(&headers, CLIENTS_FILE, c)).collect::<Result<_>>()?;
    let mut svcf_cols = Vec::new();
    let mut mvcf_cols = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        let h = h.trim();
        if FIXED_CLIENT_COLUMNS.contains(&h) {
            continue;
        }
        if schema.svcf.iter().any(|d| d.name == h) {
            svcf_cols.push((i, h.to_string()));
        } else if schema.mvcf.iter().any(|d| d.name == h) {
            mvcf_cols.push((i, h.to_string()));
        } else {
            log::warn!("{CLIENTS_FILE}: ignoring unknown column {h:?}");
        }
    }
    let mut clients = Vec::new();
    for rec in r.records() {
        let record = rec.map_err(csv_err(CLIENTS_FILE))?;
        let line = record.position().map_or(0, |p| p.line());
        let ctx = RowCtx { file: CLIENTS_FILE, line, record: &record };
        let id: u64 = ctx.parse(fixed[0], "ClientID")?;
        let birth = NaiveDate::parse_from_str(ctx.cell(fixed[1]), DATE_FORMAT).map_err(|e| ctx.err("BirthDate", e.to_string()))?;
        let mut c = ClientAttributes::new(id, birth);
        c.weight_kg = non_negative(&ctx, ctx.parse_opt(fixed[2], "WeightKG")?, "WeightKG")?;
        c.monthly_income = non_negative(&ctx, ctx.parse_opt(fixed[3], "MonthlyIncome")?, "MonthlyIncome")?;
        c.monthly_expense = non_negative(&ctx, ctx.parse_opt(fixed[4], "MonthlyExpense")?, "MonthlyExpense")?;
        c.latest_spdat_score = ctx.parse_opt(fixed[5], "SpdatScore")?;
        if c.latest_spdat_score.is_some_and(|s| s > 12) {
            return Err(ctx.err("SpdatScore", "score outside 0..=12"));
        }
        for (i, name) in &svcf_cols {
            let v = ctx.cell(*i);
            if !v.is_empty() {
                c.svcf.insert(name.clone(), v.to_string());
            }
        }
        for (i, name) in &mvcf_cols {
            let v = ctx.cell(*i);
            if !v.is_empty() {
                c.mvcf.insert(name.clone(), v.split('|').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect());
            }
        }
        clients.push(c);
    }

    let mut r = open(dir, EVENTS_FILE)?;
    let headers = r.headers().map_err(csv_err(EVENTS_FILE))?.clone();
    let cols: Vec<usize> = EVENT_COLUMNS.iter().map(|c| column_index(&headers, EVENTS_FILE, c)).collect::<Result<_>>()?;
    for h in headers.iter().filter(|h| !EVENT_COLUMNS.contains(&h.trim())) {
        log::warn!("{EVENTS_FILE}: ignoring unknown column {h:?}");
    }
    let known: HashSet<u64> = clients.iter().map(|c| c.client_id).collect();
    let mut events = Vec::new();
    for rec in r.records() {
        let record = rec.map_err(csv_err(EVENTS_FILE))?;
        let line = record.position().map_or(0, |p| p.line());
        let ctx = RowCtx { file: EVENTS_FILE, line, record: &record };
        let client_id: u64 = ctx.parse(cols[0], "ClientID")?;
        if !known.contains(&client_id) {
            return Err(Error::UnknownClient { file: EVENTS_FILE.into(), line, client_id });
        }
        let service: ServiceType = ctx.parse(cols[1], "ServiceType")?;
        let ts = |idx: usize, column: &str| {
            NaiveDateTime::parse_from_str(ctx.cell(idx), TIMESTAMP_FORMAT).map_err(|e| ctx.err(column, e.to_string()))
        };
        let start = ts(cols[2], "Start")?;
        let end = ts(cols[3], "End")?;
        if end < start {
            return Err(ctx.err("End", "event ends before it starts"));
        }
        events.push(ServiceEvent { client_id, service, start, end });
    }
    RecordSet::new(clients, events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dt(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).unwrap()
    }

    #[test]
    fn service_names_round_trip() {
        for t in ServiceType::ALL {
            assert_eq!(t.name().parse::<ServiceType>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
    }

    #[test]
    fn day_numbers() {
        let d = NaiveDate::from_ymd_opt(1970, 1, 2).unwrap();
        assert_eq!(day_number(d), 1);
        assert_eq!(date_from_day(day_number(d)), d);
        assert_eq!(minute_number(dt("1970-01-02T00:15")), 1440 + 15);
        assert_eq!(day_number(NaiveDate::from_ymd_opt(1969, 12, 31).unwrap()), -1);
    }

    #[test]
    fn rejects_unknown_client_and_reversed_event() {
        let c = ClientAttributes::new(1, NaiveDate::from_ymd_opt(1980, 1, 1).unwrap());
        let e = ServiceEvent { client_id: 2, service: ServiceType::Stay, start: dt("2020-01-01T10:00"), end: dt("2020-01-01T11:00") };
        assert!(matches!(RecordSet::new(vec![c.clone()], vec![e]), Err(Error::UnknownClient { .. })));
        let e = ServiceEvent { client_id: 1, service: ServiceType::Stay, start: dt("2020-01-01T10:00"), end: dt("2020-01-01T09:00") };
        assert!(matches!(RecordSet::new(vec![c], vec![e]), Err(Error::Row { .. })));
    }

    #[test]
    fn data_end_is_latest_event_end() {
        let c = ClientAttributes::new(1, NaiveDate::from_ymd_opt(1980, 1, 1).unwrap());
        let e1 = ServiceEvent { client_id: 1, service: ServiceType::Stay, start: dt("2020-01-01T22:00"), end: dt("2020-01-02T07:00") };
        let e2 = ServiceEvent { client_id: 1, service: ServiceType::FoodBank, start: dt("2019-05-01T12:00"), end: dt("2019-05-01T12:30") };
        let rs = RecordSet::new(vec![c], vec![e1, e2]).unwrap();
        assert_eq!(rs.data_end, NaiveDate::from_ymd_opt(2020, 1, 2));
    }
}

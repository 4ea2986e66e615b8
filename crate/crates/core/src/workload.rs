//! Experiment instances: seeded synthetic services and requests, and
//! ingestion of coffee-shop transaction logs as energy requests.
//!
//! Every draw comes from a ChaCha stream derived from the workload seed, so
//! generation is a pure function of the spec. Services, synthetic requests,
//! transaction-derived requests and synthetic transactions each use their own
//! stream and do not perturb one another.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};
use std::path::PathBuf;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{window_string, ClockTime, Energy, EnergyRequest, EnergyService, Location, TimeWindow};

const SERVICE_STREAM: u64 = 1;
const REQUEST_STREAM: u64 = 2;
const INGEST_STREAM: u64 = 3;
const TRANSACTION_STREAM: u64 = 4;

/// A closed interval `[lo, hi]`, written as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]")]
pub struct ClosedRange<T: Copy> {
    pub lo: T,
    pub hi: T,
}

impl<T: Copy> ClosedRange<T> {
    pub const fn new(lo: T, hi: T) -> Self {
        ClosedRange { lo, hi }
    }
}

impl<T: Copy + PartialOrd> ClosedRange<T> {
    pub fn contains(&self, value: T) -> bool {
        self.lo <= value && value <= self.hi
    }
}

impl<T: Copy> From<[T; 2]> for ClosedRange<T> {
    fn from([lo, hi]: [T; 2]) -> Self {
        ClosedRange { lo, hi }
    }
}

impl<T: Copy> From<ClosedRange<T>> for [T; 2] {
    fn from(r: ClosedRange<T>) -> Self {
        [r.lo, r.hi]
    }
}

/// Parameters of a synthetic experiment. Defaults follow the published
/// experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub num_services: usize,
    /// Provider stay, minutes.
    pub service_duration_range: ClosedRange<u32>,
    /// Consumer stay, minutes.
    pub request_duration_range: ClosedRange<u32>,
    pub provided_energy_range: ClosedRange<f64>,
    pub requested_energy_range: ClosedRange<f64>,
    pub battery_level_range: ClosedRange<f64>,
    #[serde(with = "window_string")]
    pub day_window: TimeWindow,
    /// Services and synthetic requests are placed uniformly in a disk of this
    /// radius around the origin.
    pub cell_radius_m: f64,
    /// Synthetic requests per simulated day.
    pub requests_per_day: usize,
    /// Simulated days; service `i` draws from the requests of day `i % days`.
    pub days: usize,
    /// When set, requests come from this transaction log instead of the
    /// synthetic generator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transactions_csv: Option<PathBuf>,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            seed: 42,
            num_services: 2000,
            service_duration_range: ClosedRange::new(10, 200),
            request_duration_range: ClosedRange::new(5, 30),
            provided_energy_range: ClosedRange::new(50.0, 100.0),
            requested_energy_range: ClosedRange::new(1.0, 100.0),
            battery_level_range: ClosedRange::new(1.0, 80.0),
            day_window: TimeWindow::from_minutes(9 * 60, 17 * 60).expect("valid default day"),
            cell_radius_m: crate::constants::DEFAULT_MAX_ENERGY_DISTANCE_M,
            requests_per_day: 560,
            days: 30,
            transactions_csv: None,
        }
    }
}

impl WorkloadSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: WorkloadSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: WorkloadSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Loads a TOML spec, or JSON when the file name ends in `.json`. A
    /// relative `transactions_csv` is resolved against the spec's directory.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
        let mut spec = if is_json {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(csv), Some(dir)) = (&spec.transactions_csv, path.parent()) {
            if csv.is_relative() {
                spec.transactions_csv = Some(dir.join(csv));
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let day = self.day_window;
        if !day.is_valid() {
            return bad(format!("day_window {day} is empty"));
        }
        let s = self.service_duration_range;
        if s.lo == 0 || s.lo > s.hi || s.lo > day.duration() {
            return bad(format!(
                "service_duration_range [{}, {}] must be non-empty, positive and fit in {day}",
                s.lo, s.hi
            ));
        }
        let r = self.request_duration_range;
        if r.lo == 0 || r.lo > r.hi {
            return bad(format!(
                "request_duration_range [{}, {}] must be non-empty and positive",
                r.lo, r.hi
            ));
        }
        let percent = |name: &str, range: ClosedRange<f64>, min_exclusive: bool| {
            let lo_ok = if min_exclusive { range.lo > 0.0 } else { range.lo >= 0.0 };
            if range.lo.is_finite() && range.hi.is_finite() && lo_ok && range.lo <= range.hi && range.hi <= 100.0 {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} [{}, {}] must be a non-empty range within [0, 100]",
                    range.lo, range.hi
                )))
            }
        };
        percent("provided_energy_range", self.provided_energy_range, true)?;
        percent("requested_energy_range", self.requested_energy_range, true)?;
        percent("battery_level_range", self.battery_level_range, false)?;
        if !(self.cell_radius_m.is_finite() && self.cell_radius_m >= 0.0) {
            return bad(format!("cell_radius_m {} must be non-negative", self.cell_radius_m));
        }
        if self.days == 0 {
            return bad("days must be at least 1".into());
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn point_in_disk(rng: &mut impl Rng, radius: f64) -> Location {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.gen::<f64>();
    Location::new(r * theta.cos(), r * theta.sin())
}

fn energy_in(rng: &mut impl Rng, range: ClosedRange<f64>) -> Energy {
    let lo = Energy::from_units(range.lo).expect("validated range").micro();
    let hi = Energy::from_units(range.hi).expect("validated range").micro();
    Energy::from_micro(rng.gen_range(lo..=hi))
}

fn minutes_in(rng: &mut impl Rng, range: ClosedRange<u32>) -> u32 {
    rng.gen_range(range.lo..=range.hi)
}

/// Consumer window starting at `start`, clipped so it ends inside the day
/// window (or by 23:59 when it starts after the day window closes).
fn consumer_window(start: ClockTime, duration: u32, day: &TimeWindow) -> TimeWindow {
    let limit = if start < day.end() {
        day.end()
    } else {
        ClockTime::LAST_MINUTE
    };
    let end = start.saturating_add(duration).min(limit);
    TimeWindow::new(start, end).unwrap_or_else(|_| {
        // Only a stay starting at 23:59 has no room left in the day.
        let last = ClockTime::LAST_MINUTE.minutes();
        TimeWindow::from_minutes(last - 1, last).expect("last minute window")
    })
}

/// Provider advertisements with capacity, stay and location drawn uniformly.
pub fn generate_services(spec: &WorkloadSpec) -> Vec<EnergyService> {
    let mut rng = spec.rng(SERVICE_STREAM);
    let day = spec.day_window;
    let longest = spec.service_duration_range.hi.min(day.duration());
    (0..spec.num_services)
        .map(|i| {
            let duration = rng.gen_range(spec.service_duration_range.lo..=longest);
            let offset = rng.gen_range(0..=day.duration() - duration);
            let start = day.start().minutes() + offset as u16;
            let window = TimeWindow::from_minutes(start, start + duration as u16)
                .expect("service window lies inside the day");
            let capacity = energy_in(&mut rng, spec.provided_energy_range);
            let location = point_in_disk(&mut rng, spec.cell_radius_m);
            EnergyService {
                id: format!("es-{i:05}"),
                owner_id: format!("p-{i:05}"),
                capacity,
                location,
                window,
            }
        })
        .collect()
}

/// `count` consumer requests with every field drawn from its spec range.
pub fn generate_requests(spec: &WorkloadSpec, count: usize) -> Vec<EnergyRequest> {
    let mut rng = spec.rng(REQUEST_STREAM);
    let day = spec.day_window;
    (0..count)
        .map(|i| {
            let start = rng.gen_range(day.start().minutes()..day.end().minutes());
            let start = ClockTime::from_minutes(start).expect("start inside the day");
            let duration = minutes_in(&mut rng, spec.request_duration_range);
            let battery_level = rng.gen_range(spec.battery_level_range.lo..=spec.battery_level_range.hi);
            let requested_energy = energy_in(&mut rng, spec.requested_energy_range);
            let location = point_in_disk(&mut rng, spec.cell_radius_m);
            EnergyRequest {
                id: format!("er-{i:06}"),
                owner_id: format!("c-{i:06}"),
                battery_level,
                requested_energy,
                window: consumer_window(start, duration, &day),
                location,
            }
        })
        .collect()
}

/// One row of a point-of-sale log.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionRecord {
    pub date: NaiveDate,
    pub time: ClockTime,
    pub location: Location,
    pub shop_id: String,
}

const TRANSACTION_COLUMNS: [&str; 5] = ["date", "time", "x", "y", "shop_id"];

/// Reads a `date,time,x,y,shop_id` log. Column order is free; names are
/// matched case-insensitively. Row numbers in errors count the header as
/// row 1.
pub fn read_transactions<R: Read>(source: R) -> Result<Vec<TransactionRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| parse_error(1, "header", e.to_string()))?
        .clone();
    if headers.iter().all(str::is_empty) {
        return Ok(Vec::new());
    }
    let mut index = [0usize; 5];
    for (slot, name) in index.iter_mut().zip(TRANSACTION_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| parse_error(1, name, "missing column".into()))?;
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_number = i as u64 + 2;
        let row = row.map_err(|e| parse_error(row_number, "row", e.to_string()))?;
        let field = |col: usize| -> Result<&str> {
            row.get(index[col])
                .ok_or_else(|| parse_error(row_number, TRANSACTION_COLUMNS[col], "missing value".into()))
        };
        let date = NaiveDate::parse_from_str(field(0)?, "%Y-%m-%d")
            .map_err(|e| parse_error(row_number, "date", format!("{e}: {:?}", field(0).unwrap_or(""))))?;
        let time: ClockTime = field(1)?
            .parse()
            .map_err(|e: Error| parse_error(row_number, "time", e.to_string()))?;
        let coord = |col: usize| -> Result<f64> {
            let raw = field(col)?;
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(row_number, TRANSACTION_COLUMNS[col], format!("invalid number {raw:?}")))
        };
        let location = Location::new(coord(2)?, coord(3)?);
        let shop_id = field(4)?.to_owned();
        records.push(TransactionRecord {
            date,
            time,
            location,
            shop_id,
        });
    }
    Ok(records)
}

fn parse_error(row: u64, column: &str, message: String) -> Error {
    Error::Parse {
        row,
        column: column.to_owned(),
        message,
    }
}

/// Turns transaction records into requests: the stay starts at the
/// transaction time; duration, battery level and requested energy are drawn
/// from the spec. Output order and ids follow the input order.
pub fn requests_from_transactions(
    records: &[TransactionRecord],
    spec: &WorkloadSpec,
) -> Vec<EnergyRequest> {
    let mut rng = spec.rng(INGEST_STREAM);
    records
        .iter()
        .enumerate()
        .map(|(i, record)| {
            let duration = minutes_in(&mut rng, spec.request_duration_range);
            let battery_level = rng.gen_range(spec.battery_level_range.lo..=spec.battery_level_range.hi);
            let requested_energy = energy_in(&mut rng, spec.requested_energy_range);
            EnergyRequest {
                id: format!("tx-{:06}", i + 1),
                owner_id: format!("c-tx-{:06}", i + 1),
                battery_level,
                requested_energy,
                window: consumer_window(record.time, duration, &spec.day_window),
                location: record.location,
            }
        })
        .collect()
}

/// Reads a transaction log and converts every record into a request.
pub fn ingest_transactions<R: Read>(source: R, spec: &WorkloadSpec) -> Result<Vec<EnergyRequest>> {
    let records = read_transactions(source)?;
    Ok(requests_from_transactions(&records, spec))
}

/// Like [`ingest_transactions`] but keeps requests grouped by calendar day,
/// in date order.
pub fn ingest_transactions_by_day<R: Read>(
    source: R,
    spec: &WorkloadSpec,
) -> Result<Vec<(NaiveDate, Vec<EnergyRequest>)>> {
    let records = read_transactions(source)?;
    let requests = requests_from_transactions(&records, spec);
    let mut days: BTreeMap<NaiveDate, Vec<EnergyRequest>> = BTreeMap::new();
    for (record, request) in records.iter().zip(requests) {
        days.entry(record.date).or_default().push(request);
    }
    Ok(days.into_iter().collect())
}

/// A stand-in point-of-sale log: `spec.requests_per_day` transactions on each
/// of `spec.days` consecutive days starting at `first_day`, at times uniform
/// over `opening_hours` and locations uniform over the cell.
pub fn synthesize_transactions(
    spec: &WorkloadSpec,
    first_day: NaiveDate,
    opening_hours: TimeWindow,
    shop_id: &str,
) -> Vec<TransactionRecord> {
    let mut rng = spec.rng(TRANSACTION_STREAM);
    let mut records = Vec::with_capacity(spec.days * spec.requests_per_day);
    for date in first_day.iter_days().take(spec.days) {
        let mut day: Vec<TransactionRecord> = (0..spec.requests_per_day)
            .map(|_| {
                let minute =
                    rng.gen_range(opening_hours.start().minutes()..opening_hours.end().minutes());
                TransactionRecord {
                    date,
                    time: ClockTime::from_minutes(minute).expect("inside opening hours"),
                    location: point_in_disk(&mut rng, spec.cell_radius_m),
                    shop_id: shop_id.to_owned(),
                }
            })
            .collect();
        day.sort_by_key(|r| r.time);
        records.extend(day);
    }
    records
}

pub fn write_transactions<W: Write>(sink: W, records: &[TransactionRecord]) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(TRANSACTION_COLUMNS)?;
    for r in records {
        writer.write_record([
            format!("{:04}-{:02}-{:02}", r.date.year(), r.date.month(), r.date.day()),
            r.time.to_string(),
            format!("{:.3}", r.location.x),
            format!("{:.3}", r.location.y),
            r.shop_id.clone(),
        ])?;
    }
    writer.flush()
}

/// One line of a JSON-lines fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Fixture {
    Service(EnergyService),
    Request(EnergyRequest),
}

pub fn write_fixtures<W: Write>(
    mut sink: W,
    services: &[EnergyService],
    requests: &[EnergyRequest],
) -> std::io::Result<()> {
    let services = services.iter().cloned().map(Fixture::Service);
    let requests = requests.iter().cloned().map(Fixture::Request);
    for fixture in services.chain(requests) {
        serde_json::to_writer(&mut sink, &fixture)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()
}

/// Parses a JSON-lines fixture file. Blank lines are skipped; row numbers in
/// errors are 1-based line numbers.
pub fn read_fixtures<R: BufRead>(source: R) -> Result<(Vec<EnergyService>, Vec<EnergyRequest>)> {
    let mut services = Vec::new();
    let mut requests = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let row = i as u64 + 1;
        let line = line.map_err(|e| parse_error(row, "line", e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line).map_err(|e| parse_error(row, "json", e.to_string()))? {
            Fixture::Service(s) => services.push(s),
            Fixture::Request(r) => requests.push(r),
        }
    }
    Ok((services, requests))
}

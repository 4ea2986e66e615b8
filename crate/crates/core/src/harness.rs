//! Benchmark harness: runs the composers over a workload and aggregates
//! reward, remaining energy and execution time by provider stay time.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::composition::{compose, verify_plan, Algorithm, DEFAULT_BF_LIMIT};
use crate::constants::ModelConstants;
use crate::error::{Error, Result};
use crate::model::{EnergyRequest, EnergyService};
use crate::selection::{select_nearby, ScoredRequest};
use crate::workload::{generate_requests, generate_services, ingest_transactions_by_day, WorkloadSpec};

pub const DEFAULT_BUCKET_EDGES: [u32; 5] = [10, 50, 100, 150, 200];

/// What to do with brute force when an instance has more scored requests
/// than the enumeration limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BfPolicy {
    /// Leave BF out for that instance and list it in `bf_skipped`.
    #[default]
    Skip,
    /// Abort the experiment.
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithms: Vec<Algorithm>,
    pub bf_limit: usize,
    pub bf_policy: BfPolicy,
    /// Stay-time bucket edges in minutes, strictly increasing. Buckets are
    /// half-open except the last, which includes its upper edge.
    pub bucket_edges: Vec<u32>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithms: Algorithm::ALL.to_vec(),
            bf_limit: DEFAULT_BF_LIMIT,
            bf_policy: BfPolicy::Skip,
            bucket_edges: DEFAULT_BUCKET_EDGES.to_vec(),
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.bucket_edges.len() < 2 || self.bucket_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "bucket edges {:?} must hold at least two strictly increasing values",
                self.bucket_edges
            )));
        }
        Ok(())
    }

    /// Algorithms in canonical order with duplicates removed.
    fn algorithms(&self) -> Vec<Algorithm> {
        let mut algorithms = self.algorithms.clone();
        algorithms.sort();
        algorithms.dedup();
        algorithms
    }

    fn bucket_of(&self, stay_minutes: u32) -> Option<(u32, u32)> {
        let edges = &self.bucket_edges;
        let last = edges.len() - 1;
        edges.windows(2).enumerate().find_map(|(i, w)| {
            let inside = stay_minutes >= w[0] && (stay_minutes < w[1] || (i + 1 == last && stay_minutes == w[1]));
            inside.then_some((w[0], w[1]))
        })
    }
}

/// Outcome of one algorithm on one service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub service_id: String,
    pub algorithm: Algorithm,
    pub stay_minutes: u32,
    pub scored_count: usize,
    pub accepted_count: usize,
    pub total_reward: f64,
    pub remaining_energy: f64,
    pub execution_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub bucket_lo: u32,
    pub bucket_hi: u32,
    pub avg_total_reward: f64,
    pub avg_remaining_energy: f64,
    pub avg_execution_us: f64,
    pub instance_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSeries {
    pub algorithm: Algorithm,
    pub buckets: Vec<BucketSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub workload: WorkloadSpec,
    pub constants: ModelConstants,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ReportConfig,
    pub series: Vec<AlgorithmSeries>,
    /// Every per-instance result, ordered by service then algorithm.
    pub instances: Vec<InstanceRow>,
    /// Services for which BF was over its limit and not run.
    pub bf_skipped: Vec<String>,
    /// Services where FCFS beat IB. Legitimate, but expected to be rare.
    pub fcfs_over_ib: Vec<String>,
    /// Services where IB beat BF. Always a bug.
    pub ib_over_bf: Vec<String>,
}

/// Means over every instance of one algorithm, regardless of bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overall {
    pub mean_reward: f64,
    pub mean_remaining_energy: f64,
    pub mean_execution_us: f64,
    pub instances: usize,
}

impl ExperimentReport {
    pub fn rows(&self, algorithm: Algorithm) -> impl Iterator<Item = &InstanceRow> {
        self.instances.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn overall(&self, algorithm: Algorithm) -> Option<Overall> {
        let rows: Vec<&InstanceRow> = self.rows(algorithm).collect();
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        Some(Overall {
            mean_reward: rows.iter().map(|r| r.total_reward).sum::<f64>() / n,
            mean_remaining_energy: rows.iter().map(|r| r.remaining_energy).sum::<f64>() / n,
            mean_execution_us: rows.iter().map(|r| r.execution_us).sum::<f64>() / n,
            instances: rows.len(),
        })
    }
}

fn scored_digest(scored: &[ScoredRequest]) -> u64 {
    let mut h = DefaultHasher::new();
    for s in scored {
        s.request.id.hash(&mut h);
        s.request.requested_energy.hash(&mut h);
        s.request.window.hash(&mut h);
        s.reward.total.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Generates the workload described by `spec` and runs it.
pub fn run_experiment(
    spec: &WorkloadSpec,
    constants: &ModelConstants,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    spec.validate()?;
    let services = generate_services(spec);
    let pools = request_pools(spec)?;
    let mut report = run_instances(&services, &pools, constants, config)?;
    report.config.seed = spec.seed;
    report.config.workload = spec.clone();
    Ok(report)
}

/// Requests available to services, one pool per day.
pub fn request_pools(spec: &WorkloadSpec) -> Result<Vec<Vec<EnergyRequest>>> {
    if let Some(path) = &spec.transactions_csv {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let days = ingest_transactions_by_day(std::io::BufReader::new(file), spec)?;
        return Ok(days.into_iter().map(|(_, requests)| requests).collect());
    }
    let all = generate_requests(spec, spec.days * spec.requests_per_day);
    if spec.requests_per_day == 0 {
        return Ok(vec![Vec::new(); spec.days]);
    }
    Ok(all.chunks(spec.requests_per_day).map(<[_]>::to_vec).collect())
}

/// Runs every configured algorithm on each service. Service `i` sees the
/// requests in `pools[i % pools.len()]`; with no pools every service sees
/// none.
pub fn run_instances(
    services: &[EnergyService],
    pools: &[Vec<EnergyRequest>],
    constants: &ModelConstants,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    constants.validate()?;
    config.validate()?;
    let algorithms = config.algorithms();
    let mut instances = Vec::new();
    let mut bf_skipped = Vec::new();
    let mut fcfs_over_ib = Vec::new();
    let mut ib_over_bf = Vec::new();

    for (i, service) in services.iter().enumerate() {
        let pool: &[EnergyRequest] = if pools.is_empty() {
            &[]
        } else {
            &pools[i % pools.len()]
        };
        let scored = select_nearby(service, pool, constants)?;
        let digest = scored_digest(&scored);
        let mut rewards = [None; 3];

        for &algorithm in &algorithms {
            if algorithm == Algorithm::Bf && scored.len() > config.bf_limit {
                match config.bf_policy {
                    BfPolicy::Skip => {
                        bf_skipped.push(service.id.clone());
                        continue;
                    }
                    BfPolicy::Fail => {
                        return Err(Error::Config(format!(
                            "service {} has {} scored requests, over the brute force limit of {}; \
                             lower requests_per_day or leave bf out of the algorithm set",
                            service.id,
                            scored.len(),
                            config.bf_limit
                        )))
                    }
                }
            }
            assert_eq!(scored_digest(&scored), digest, "scored set changed between algorithms");

            let started = Instant::now();
            let plan = compose(algorithm, service, &scored, config.bf_limit)?;
            let execution_us = started.elapsed().as_secs_f64() * 1e6;

            let violations = verify_plan(service, &plan, constants);
            if let Some(v) = violations.first() {
                return Err(Error::Validation(format!(
                    "{algorithm} produced an invalid plan for service {}: {v}",
                    service.id
                )));
            }
            rewards[algorithm as usize] = Some(plan.total_reward);
            instances.push(InstanceRow {
                service_id: service.id.clone(),
                algorithm,
                stay_minutes: service.window.duration(),
                scored_count: scored.len(),
                accepted_count: plan.accepted.len(),
                total_reward: plan.total_reward,
                remaining_energy: plan.remaining_energy.as_units(),
                execution_us,
            });
        }

        let [ib, fcfs, bf] = rewards;
        if let (Some(ib), Some(fcfs)) = (ib, fcfs) {
            if fcfs > ib {
                fcfs_over_ib.push(service.id.clone());
            }
        }
        if let (Some(ib), Some(bf)) = (ib, bf) {
            if ib > bf {
                ib_over_bf.push(service.id.clone());
            }
        }
    }

    let series = algorithms
        .iter()
        .map(|&algorithm| AlgorithmSeries {
            algorithm,
            buckets: summarize(&instances, algorithm, config),
        })
        .collect();

    Ok(ExperimentReport {
        config: ReportConfig {
            seed: 0,
            workload: WorkloadSpec::default(),
            constants: constants.clone(),
            experiment: config.clone(),
        },
        series,
        instances,
        bf_skipped,
        fcfs_over_ib,
        ib_over_bf,
    })
}

fn summarize(rows: &[InstanceRow], algorithm: Algorithm, config: &ExperimentConfig) -> Vec<BucketSummary> {
    config
        .bucket_edges
        .windows(2)
        .filter_map(|w| {
            let bucket = (w[0], w[1]);
            let members: Vec<&InstanceRow> = rows
                .iter()
                .filter(|r| r.algorithm == algorithm && config.bucket_of(r.stay_minutes) == Some(bucket))
                .collect();
            if members.is_empty() {
                return None;
            }
            let n = members.len() as f64;
            Some(BucketSummary {
                bucket_lo: bucket.0,
                bucket_hi: bucket.1,
                avg_total_reward: members.iter().map(|r| r.total_reward).sum::<f64>() / n,
                avg_remaining_energy: members.iter().map(|r| r.remaining_energy).sum::<f64>() / n,
                avg_execution_us: members.iter().map(|r| r.execution_us).sum::<f64>() / n,
                instance_count: members.len(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "algorithm",
    "bucket_lo",
    "bucket_hi",
    "avg_reward",
    "avg_remaining_energy",
    "avg_exec_us",
    "n",
];

/// Index of the timing column in the CSV report.
pub const CSV_TIMING_COLUMN: usize = 5;

/// Decimal text with at most `digits` significant digits, trailing zeros
/// trimmed.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let exponent = value.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - exponent).max(0) as usize;
    let mut text = format!("{value:.decimals$}");
    if text.contains('.') {
        let trimmed = text.trim_end_matches('0').trim_end_matches('.').len();
        text.truncate(trimmed);
    }
    text
}

pub fn write_csv<W: Write>(report: &ExperimentReport, sink: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(CSV_HEADER)?;
    for series in &report.series {
        for b in &series.buckets {
            writer.write_record([
                series.algorithm.to_string(),
                b.bucket_lo.to_string(),
                b.bucket_hi.to_string(),
                format_significant(b.avg_total_reward, 12),
                format_significant(b.avg_remaining_energy, 12),
                format_significant(b.avg_execution_us, 12),
                b.instance_count.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// One parsed line of a CSV report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub algorithm: Algorithm,
    pub bucket_lo: u32,
    pub bucket_hi: u32,
    pub avg_reward: f64,
    pub avg_remaining_energy: f64,
    pub avg_exec_us: f64,
    pub n: usize,
}

pub fn read_csv<R: Read>(source: R) -> Result<Vec<CsvRow>> {
    let mut reader = csv::Reader::from_reader(source);
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                row: i as u64 + 2,
                column: "record".into(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Writes `report` to `destination` as CSV or pretty JSON.
pub fn write_report(report: &ExperimentReport, format: ReportFormat, destination: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::io(destination, e);
    let file = File::create(destination).map_err(io)?;
    let mut sink = BufWriter::new(file);
    match format {
        ReportFormat::Csv => write_csv(report, &mut sink).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(e) => io(e),
            other => Error::Config(format!("{other:?}")),
        })?,
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, report).map_err(|e| io(e.into()))?;
            sink.write_all(b"\n").map_err(io)?;
        }
    }
    sink.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Energy, Location, TimeWindow};

    fn tiny_spec() -> WorkloadSpec {
        WorkloadSpec {
            num_services: 60,
            requests_per_day: 120,
            days: 2,
            ..WorkloadSpec::default()
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(0.6221, 12), "0.6221");
        assert_eq!(format_significant(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_significant(123456.7890123456, 12), "123456.789012");
        assert_eq!(format_significant(42.0, 12), "42");
        assert_eq!(format_significant(-2.5, 12), "-2.5");
    }

    #[test]
    fn bucket_assignment() {
        let c = ExperimentConfig::default();
        assert_eq!(c.bucket_of(10), Some((10, 50)));
        assert_eq!(c.bucket_of(49), Some((10, 50)));
        assert_eq!(c.bucket_of(50), Some((50, 100)));
        assert_eq!(c.bucket_of(200), Some((150, 200)));
        assert_eq!(c.bucket_of(9), None);
        assert_eq!(c.bucket_of(201), None);
    }

    #[test]
    fn rejects_bad_bucket_edges() {
        let config = ExperimentConfig {
            bucket_edges: vec![10, 10],
            ..ExperimentConfig::default()
        };
        assert!(run_instances(&[], &[], &ModelConstants::default(), &config).is_err());
    }

    #[test]
    fn averages_recompute_from_rows() {
        let report = run_experiment(&tiny_spec(), &ModelConstants::default(), &ExperimentConfig::default()).unwrap();
        assert!(!report.instances.is_empty());
        let config = &report.config.experiment;
        for series in &report.series {
            for b in &series.buckets {
                assert!(b.instance_count > 0);
                let rows: Vec<_> = report
                    .rows(series.algorithm)
                    .filter(|r| config.bucket_of(r.stay_minutes) == Some((b.bucket_lo, b.bucket_hi)))
                    .collect();
                assert_eq!(rows.len(), b.instance_count);
                let n = rows.len() as f64;
                assert_eq!(rows.iter().map(|r| r.total_reward).sum::<f64>() / n, b.avg_total_reward);
                assert_eq!(rows.iter().map(|r| r.remaining_energy).sum::<f64>() / n, b.avg_remaining_energy);
            }
        }
        assert!(report.ib_over_bf.is_empty());
    }

    #[test]
    fn empty_algorithm_set_gives_empty_series() {
        let config = ExperimentConfig {
            algorithms: vec![],
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&tiny_spec(), &ModelConstants::default(), &config).unwrap();
        assert!(report.series.is_empty());
        assert!(report.instances.is_empty());
    }

    #[test]
    fn single_uncontended_request_ties_all_algorithms() {
        let service = EnergyService {
            id: "es".into(),
            owner_id: "p".into(),
            capacity: Energy::from_units(80.0).unwrap(),
            location: Location::default(),
            window: "10:00-11:00".parse().unwrap(),
        };
        let request = EnergyRequest {
            id: "er".into(),
            owner_id: "c".into(),
            battery_level: 15.0,
            requested_energy: Energy::from_units(30.0).unwrap(),
            window: "10:10-10:25".parse::<TimeWindow>().unwrap(),
            location: Location::new(1.0, 1.0),
        };
        let report = run_instances(
            &[service],
            &[vec![request]],
            &ModelConstants::default(),
            &ExperimentConfig::default(),
        )
        .unwrap();
        let rewards: Vec<f64> = report.instances.iter().map(|r| r.total_reward).collect();
        assert_eq!(rewards.len(), 3);
        assert!(rewards[0] > 0.0);
        assert!(rewards.iter().all(|&r| r == rewards[0]));
    }

    #[test]
    fn bf_over_limit_is_skipped_or_fails() {
        let spec = WorkloadSpec {
            num_services: 20,
            ..WorkloadSpec::default()
        };
        let skip = ExperimentConfig {
            bf_limit: 2,
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&spec, &ModelConstants::default(), &skip).unwrap();
        assert!(!report.bf_skipped.is_empty());
        assert_eq!(report.rows(Algorithm::Ib).count(), 20);
        assert_eq!(report.rows(Algorithm::Bf).count(), 20 - report.bf_skipped.len());

        let fail = ExperimentConfig {
            bf_policy: BfPolicy::Fail,
            ..skip
        };
        let err = run_experiment(&spec, &ModelConstants::default(), &fail).unwrap_err();
        assert!(err.to_string().contains("brute force limit"));
    }

    #[test]
    fn csv_round_trip() {
        let report = run_experiment(&tiny_spec(), &ModelConstants::default(), &ExperimentConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&report, &mut buf).unwrap();
        let rows = read_csv(buf.as_slice()).unwrap();
        let expected: Vec<_> = report
            .series
            .iter()
            .flat_map(|s| s.buckets.iter().map(move |b| (s.algorithm, b)))
            .collect();
        assert_eq!(rows.len(), expected.len());
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-11 * b.abs().max(1e-300);
        for (row, (algorithm, b)) in rows.iter().zip(expected) {
            assert_eq!(row.algorithm, algorithm);
            assert_eq!((row.bucket_lo, row.bucket_hi, row.n), (b.bucket_lo, b.bucket_hi, b.instance_count));
            assert!(close(row.avg_reward, b.avg_total_reward));
            assert!(close(row.avg_remaining_energy, b.avg_remaining_energy));
            assert!(close(row.avg_exec_us, b.avg_execution_us));
        }
    }

    #[test]
    fn json_report_is_one_document() {
        let report = run_experiment(&tiny_spec(), &ModelConstants::default(), &ExperimentConfig::default()).unwrap();
        let dir = std::env::temp_dir().join(format!("eaas-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        write_report(&report, ReportFormat::Json, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let report = run_instances(&[], &[], &ModelConstants::default(), &ExperimentConfig::default()).unwrap();
        let path = Path::new("/nonexistent-dir/report.csv");
        let err = write_report(&report, ReportFormat::Csv, path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent-dir/report.csv"));
    }
}

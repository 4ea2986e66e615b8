use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use eaas_compose::harness::{self, BfPolicy, ExperimentConfig, ReportFormat};
use eaas_compose::workload::{self, read_fixtures};
use eaas_compose::{
    compose, select_nearby, validate_instance, Algorithm, EnergyService, Error, ModelConstants, Result,
    TimeWindow, WorkloadSpec, DEFAULT_BF_LIMIT,
};

#[derive(Parser)]
#[command(name = "eaas-compose", version, about = "Incentive-based composition of energy service requests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a workload as JSON-lines fixtures.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a synthetic transaction log with the same daily volume.
        #[arg(long)]
        transactions_csv: Option<PathBuf>,
        /// First calendar day of the synthetic transaction log.
        #[arg(long, default_value = "2019-04-01")]
        first_day: NaiveDate,
        /// Opening hours of the shop in the synthetic transaction log.
        #[arg(long, default_value = "07:00-20:00")]
        opening_hours: TimeWindow,
    },
    /// Compose one service against a set of requests and print the plan.
    Compose {
        /// Service as inline JSON or a path to a JSON file.
        #[arg(long)]
        service: String,
        /// JSON-lines fixture file; only request lines are used.
        #[arg(long)]
        requests: PathBuf,
        #[arg(long, value_parser = parse_algorithm)]
        algo: Algorithm,
        #[arg(long)]
        constants: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BF_LIMIT)]
        bf_limit: usize,
    },
    /// Run a full experiment and write the aggregated report.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = parse_algorithm, default_value = "ib,fcfs,bf")]
        algos: Vec<Algorithm>,
        #[arg(long, value_parser = parse_format, default_value = "csv")]
        format: ReportFormat,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the spec file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = DEFAULT_BF_LIMIT)]
        bf_limit: usize,
        /// Fail instead of skipping BF on instances over the limit.
        #[arg(long)]
        bf_strict: bool,
        /// Stay-time bucket edges in minutes.
        #[arg(long, value_delimiter = ',', default_value = "10,50,100,150,200")]
        buckets: Vec<u32>,
        #[arg(long)]
        constants: Option<PathBuf>,
    },
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> std::result::Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load_constants(path: Option<&Path>) -> Result<ModelConstants> {
    path.map_or_else(|| Ok(ModelConstants::default()), ModelConstants::load)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io {
            path: path.to_owned(),
            source: e,
        })
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_owned(),
        source: e,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            spec,
            out,
            transactions_csv,
            first_day,
            opening_hours,
        } => {
            let spec = WorkloadSpec::load(&spec)?;
            let services = workload::generate_services(&spec);
            let requests: Vec<_> = harness::request_pools(&spec)?.into_iter().flatten().collect();
            workload::write_fixtures(create(&out)?, &services, &requests).map_err(io_error(&out))?;
            eprintln!(
                "wrote {} services and {} requests to {}",
                services.len(),
                requests.len(),
                out.display()
            );
            if let Some(path) = transactions_csv {
                let records = workload::synthesize_transactions(&spec, first_day, opening_hours, "1");
                workload::write_transactions(create(&path)?, &records).map_err(io_error(&path))?;
                eprintln!("wrote {} transactions to {}", records.len(), path.display());
            }
            Ok(())
        }
        Command::Compose {
            service,
            requests,
            algo,
            constants,
            bf_limit,
        } => {
            let constants = load_constants(constants.as_deref())?;
            let service_json = if service.trim_start().starts_with('{') {
                service
            } else {
                let path = Path::new(&service);
                std::fs::read_to_string(path).map_err(io_error(path))?
            };
            let service: EnergyService = serde_json::from_str(&service_json)
                .map_err(|e| Error::Validation(format!("service: {e}")))?;
            let (_, requests) = read_fixtures(open(&requests)?)?;

            let findings = validate_instance(&service, &requests);
            if !findings.is_empty() {
                for f in &findings {
                    eprintln!("{f}");
                }
                return Err(Error::Validation(format!("{} invalid field(s)", findings.len())));
            }
            let scored = select_nearby(&service, &requests, &constants)?;
            let plan = compose(algo, &service, &scored, bf_limit)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            serde_json::to_writer_pretty(&mut out, &plan.to_document())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e.into(),
                })?;
            writeln!(out).map_err(io_error(Path::new("<stdout>")))?;
            Ok(())
        }
        Command::Bench {
            spec,
            algos,
            format,
            out,
            seed,
            bf_limit,
            bf_strict,
            buckets,
            constants,
        } => {
            let mut spec = WorkloadSpec::load(&spec)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let constants = load_constants(constants.as_deref())?;
            let config = ExperimentConfig {
                algorithms: algos,
                bf_limit,
                bf_policy: if bf_strict { BfPolicy::Fail } else { BfPolicy::Skip },
                bucket_edges: buckets,
            };
            let report = harness::run_experiment(&spec, &constants, &config)?;
            harness::write_report(&report, format, &out)?;
            print_summary(&report);
            Ok(())
        }
    }
}

fn print_summary(report: &harness::ExperimentReport) {
    for series in &report.series {
        if let Some(o) = report.overall(series.algorithm) {
            eprintln!(
                "{:<4} n={:<6} reward={:.4} remaining={:.3} exec_us={:.2}",
                series.algorithm.to_string(),
                o.instances,
                o.mean_reward,
                o.mean_remaining_energy,
                o.mean_execution_us
            );
        }
    }
    if let (Some(ib), Some(fcfs)) = (report.overall(Algorithm::Ib), report.overall(Algorithm::Fcfs)) {
        eprintln!(
            "IB vs FCFS: reward {:+.1}%, remaining energy {:+.1}%",
            100.0 * (ib.mean_reward - fcfs.mean_reward) / fcfs.mean_reward,
            100.0 * (ib.mean_remaining_energy - fcfs.mean_remaining_energy) / fcfs.mean_remaining_energy
        );
    }
    if !report.bf_skipped.is_empty() {
        eprintln!("BF skipped on {} instance(s) over the limit", report.bf_skipped.len());
    }
    if !report.ib_over_bf.is_empty() {
        eprintln!("warning: IB exceeded BF on {} instance(s)", report.ib_over_bf.len());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

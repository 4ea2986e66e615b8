use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eaas_compose::workload::read_fixtures;
use eaas_compose::{ModelConstants, PlanDocument, WorkloadSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eaas-compose"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary runs");
    if !out.status.success() {
        eprintln!("stderr: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn small_spec(name: &str) -> PathBuf {
    let path = scratch(name);
    std::fs::write(
        &path,
        "seed = 5\nnum_services = 40\nrequests_per_day = 120\ndays = 4\n",
    )
    .unwrap();
    path
}

#[test]
fn generate_then_compose_every_algorithm() {
    let spec = small_spec("gen.toml");
    let fixtures = scratch("gen.jsonl");
    let out = run(bin().args(["generate", "--spec"]).arg(&spec).arg("--out").arg(&fixtures));
    assert!(out.status.success());

    let (services, requests) = read_fixtures(std::fs::File::open(&fixtures).map(std::io::BufReader::new).unwrap()).unwrap();
    assert_eq!(services.len(), 40);
    assert_eq!(requests.len(), 120 * 4);

    let service_path = scratch("service.json");
    std::fs::write(&service_path, serde_json::to_string(&services[0]).unwrap()).unwrap();
    let mut rewards = Vec::new();
    for algo in ["ib", "fcfs", "bf"] {
        let out = run(bin()
            .args(["compose", "--service"])
            .arg(&service_path)
            .arg("--requests")
            .arg(&fixtures)
            .args(["--algo", algo, "--bf-limit", "40"]));
        assert!(out.status.success(), "{algo}");
        let plan: PlanDocument = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(plan.service_id, services[0].id);
        rewards.push(plan.total_reward);
    }
    assert!(rewards[0] <= rewards[2] && rewards[1] <= rewards[2]);
}

#[test]
fn compose_accepts_inline_service_json() {
    let fixtures = scratch("inline.jsonl");
    std::fs::write(
        &fixtures,
        concat!(
            r#"{"type":"request","id":"a","owner_id":"c","battery_level":10.0,"requested_energy":50.0,"window":{"start":"09:00","end":"09:30"},"location":{"x":1.0,"y":1.0}}"#,
            "\n"
        ),
    )
    .unwrap();
    let service = r#"{"id":"es","owner_id":"p","capacity":100.0,"location":{"x":0.0,"y":0.0},"window":{"start":"09:00","end":"11:00"}}"#;
    let out = run(bin()
        .args(["compose", "--service", service, "--requests"])
        .arg(&fixtures)
        .args(["--algo", "IB"]));
    assert!(out.status.success());
    let plan: PlanDocument = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(plan.accepted.len(), 1);
    assert!((plan.total_reward - 0.6221).abs() < 1e-12);
    assert_eq!(plan.remaining_energy.as_units(), 50.0);
}

#[test]
fn invalid_instance_exits_with_one_and_names_the_field() {
    let fixtures = scratch("invalid.jsonl");
    std::fs::write(
        &fixtures,
        concat!(
            r#"{"type":"request","id":"bad","owner_id":"c","battery_level":140.0,"requested_energy":5.0,"window":{"start":"09:00","end":"09:30"},"location":{"x":1.0,"y":1.0}}"#,
            "\n"
        ),
    )
    .unwrap();
    let service = r#"{"id":"es","owner_id":"p","capacity":100.0,"location":{"x":0.0,"y":0.0},"window":{"start":"09:00","end":"11:00"}}"#;
    let out = run(bin()
        .args(["compose", "--service", service, "--requests"])
        .arg(&fixtures)
        .args(["--algo", "fcfs"]));
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad") && stderr.contains("battery"), "{stderr}");
}

#[test]
fn missing_file_exits_with_two() {
    let out = run(bin().args(["bench", "--spec", "/nonexistent/spec.toml", "--out"]).arg(scratch("never.csv")));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/spec.toml"));
}

#[test]
fn bad_arguments_exit_with_one() {
    let out = run(bin().args(["compose", "--algo", "greedy"]));
    assert_eq!(out.status.code(), Some(1));
    let spec = scratch("bad.toml");
    std::fs::write(&spec, "num_services = \"many\"\n").unwrap();
    let out = run(bin().args(["bench", "--spec"]).arg(&spec).arg("--out").arg(scratch("bad.csv")));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_writes_json_report() {
    let spec = small_spec("bench.toml");
    let report = scratch("bench.json");
    let out = run(bin()
        .args(["bench", "--spec"])
        .arg(&spec)
        .args(["--algos", "ib,fcfs,bf", "--format", "json", "--seed", "9", "--out"])
        .arg(&report));
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc["config"]["seed"], 9);
    let series = doc["series"].as_array().unwrap();
    assert_eq!(series.len(), 3);
    assert!(doc["ib_over_bf"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("IB vs FCFS"));
}

#[test]
fn bundled_transaction_workload_runs() {
    let report = scratch("coffee.csv");
    let out = run(bin()
        .args(["bench", "--spec"])
        .arg(data("coffee_shop.toml"))
        .arg("--constants")
        .arg(data("constants.toml"))
        .args(["--algos", "ib,fcfs", "--out"])
        .arg(&report));
    assert!(out.status.success());
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("algorithm,bucket_lo,bucket_hi,avg_reward,avg_remaining_energy,avg_exec_us,n"));
    assert!(text.lines().count() > 2);
}

#[test]
fn bundled_configs_match_builtin_defaults() {
    assert_eq!(WorkloadSpec::load(data("default.toml")).unwrap(), WorkloadSpec::default());
    assert_eq!(ModelConstants::load(data("constants.toml")).unwrap(), ModelConstants::default());
    let coffee = WorkloadSpec::load(data("coffee_shop.toml")).unwrap();
    assert_eq!(coffee.transactions_csv, Some(data("coffee_shop.csv")));
}

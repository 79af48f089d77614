use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn timdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timdp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(args: &[&str]) -> Output {
    let out = timdp(args);
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["gen", "--out", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn values(path: &Path) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["state", "value", "controls"]);
    r.records()
        .map(|rec| rec.unwrap()[1].parse().unwrap())
        .collect()
}

fn solve(model: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "solve",
        "--model",
        model.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    timdp(&args)
}

fn cluster_result(model: &Path, out: &Path, extra: &[&str]) -> Value {
    let mut args = vec![
        "cluster",
        "--model",
        model.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ok(&args);
    read_json(&out.join("cluster_result.json"))["result"].clone()
}

fn separable(dir: &Path, agents: &str) -> PathBuf {
    gen(
        dir,
        "sep.json",
        &[
            "--seed",
            "5",
            "--agents",
            agents,
            "--scope",
            "agent-local",
            "--random-clusters",
            "2",
        ],
    )
}

#[test]
fn solvers_agree_on_separable_model() {
    let dir = TempDir::new().unwrap();
    let model = separable(dir.path(), "4");
    let mut results = Vec::new();
    for solver in ["vi", "cvi", "hybrid", "cvi-s"] {
        let out = dir.path().join(solver);
        let run = solve(&model, &out, &["--solver", solver]);
        assert_eq!(code(&run), 0, "{solver}");
        for file in ["solve_report.json", "trace.csv", "values.csv"] {
            assert!(out.join(file).exists(), "{solver} {file}");
        }
        results.push(values(&out.join("values.csv")));
    }
    assert_eq!(results[0].len(), 16);
    for other in &results[1..] {
        let gap = results[0]
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-6, "gap {gap}");
    }
}

#[test]
fn report_records_command_and_certificate() {
    let dir = TempDir::new().unwrap();
    let model = separable(dir.path(), "3");
    let out = dir.path().join("run");
    assert_eq!(code(&solve(&model, &out, &["--epsilon", "1e-10"])), 0);
    let report = read_json(&out.join("solve_report.json"));
    assert!(report["command_line"].as_array().unwrap().len() > 1);
    assert_eq!(report["args"]["flags"]["epsilon"], 1e-10);
    let r = &report["result"];
    assert_eq!(r["converged"], true);
    let bound = &r["bound"];
    assert!(bound["lower"].as_f64().unwrap() <= bound["upper"].as_f64().unwrap());
    let mut trace = csv::Reader::from_path(out.join("trace.csv")).unwrap();
    assert_eq!(
        trace.records().count(),
        r["iterations"].as_u64().unwrap() as usize
    );
}

#[test]
fn clusters_flag_overrides_model_clustering() {
    let dir = TempDir::new().unwrap();
    let model = gen(dir.path(), "m.json", &["--seed", "2", "--agents", "3"]);
    let out = dir.path().join("run");
    assert_eq!(code(&solve(&model, &out, &["--clusters", "0,1,0"])), 0);
    let clustering = &read_json(&out.join("solve_report.json"))["result"]["clustering"];
    assert_eq!(clustering, &serde_json::json!([[0, 2], [1]]));

    let bad = solve(&model, &dir.path().join("bad"), &["--clusters", "0,1"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn invalid_model_exits_three_without_outputs() {
    let dir = TempDir::new().unwrap();
    let model = gen(dir.path(), "m.json", &["--seed", "1", "--agents", "2"]);
    let mut spec = read_json(&model);
    let p = spec["kernels"][0][1][2][0].as_f64().unwrap();
    spec["kernels"][0][1][2][0] = (p + 0.5).into();
    fs::write(&model, spec.to_string()).unwrap();

    let out = dir.path().join("run");
    let run = solve(&model, &out, &[]);
    assert_eq!(code(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("invalid model"));
    assert!(!out.join("values.csv").exists());
    assert!(!out.join("solve_report.json").exists());
}

#[test]
fn missing_model_is_an_io_failure() {
    let dir = TempDir::new().unwrap();
    let run = solve(&dir.path().join("absent.json"), dir.path(), &[]);
    assert_eq!(code(&run), 1);
}

#[test]
fn iteration_cap_exits_four_with_outputs() {
    let dir = TempDir::new().unwrap();
    let model = separable(dir.path(), "3");
    let out = dir.path().join("run");
    let run = solve(&model, &out, &["--max-iterations", "1"]);
    assert_eq!(code(&run), 4);
    let report = read_json(&out.join("solve_report.json"));
    assert_eq!(report["result"]["converged"], false);
    assert_eq!(values(&out.join("values.csv")).len(), 8);
}

#[test]
fn separable_solver_refuses_coupled_model() {
    let dir = TempDir::new().unwrap();
    let model = gen(
        dir.path(),
        "m.json",
        &["--agents", "3", "--clusters", "0,1,1", "--reward", "full"],
    );
    assert_eq!(
        code(&solve(
            &model,
            &dir.path().join("run"),
            &["--solver", "cvi-s"]
        )),
        5
    );
}

#[test]
fn out_of_range_gamma_is_invalid() {
    let dir = TempDir::new().unwrap();
    let model = separable(dir.path(), "2");
    assert_eq!(
        code(&solve(&model, &dir.path().join("run"), &["--gamma", "1.0"])),
        3
    );
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(code(&timdp(&["solve", "--no-such-flag"])), 2);
}

#[test]
fn k_equal_to_agents_needs_no_search() {
    let dir = TempDir::new().unwrap();
    let model = separable(dir.path(), "4");
    let result = cluster_result(&model, dir.path(), &["--k", "4"]);
    assert_eq!(
        result["assignment"],
        serde_json::json!([[0], [1], [2], [3]])
    );
    assert_eq!(result["evaluations_counted"], 0);
}

#[test]
fn greedy_matches_brute_force_for_two_clusters() {
    let dir = TempDir::new().unwrap();
    let model = separable(dir.path(), "5");
    for backend in ["full", "decomposed"] {
        let greedy = cluster_result(
            &model,
            &dir.path().join(format!("g-{backend}")),
            &["--k", "2", "--backend", backend],
        );
        let brute = cluster_result(
            &model,
            &dir.path().join(format!("b-{backend}")),
            &["--k", "2", "--method", "brute", "--backend", backend],
        );
        let (g, b) = (
            greedy["score"].as_f64().unwrap(),
            brute["score"].as_f64().unwrap(),
        );
        assert!((g - b).abs() < 1e-6, "{backend}: {g} vs {b}");
        assert_eq!(brute["evaluations_counted"], 15);
    }
}

#[test]
fn evaluation_counts_follow_split_sizes() {
    let dir = TempDir::new().unwrap();
    let model = separable(dir.path(), "5");
    let result = cluster_result(&model, dir.path(), &["--k", "3", "--backend", "decomposed"]);
    let first = 2u64.pow(4) - 1;
    let groups: Vec<u64> = result["trace"]["steps"][1]["assignment"]
        .as_array()
        .unwrap()
        .iter()
        .map(|g| g.as_array().unwrap().len() as u64)
        .collect();
    let second: u64 = groups.iter().map(|&c| 2u64.pow(c as u32 - 1) - 1).sum();
    assert_eq!(result["evaluations_counted"], first + second);
    assert_eq!(result["naive_evaluations"], 25);
    let trace = csv::Reader::from_path(dir.path().join("gsa_trace.csv")).unwrap();
    assert_eq!(trace.into_records().count(), 3);
}

#[test]
fn brute_force_refuses_too_many_agents() {
    let dir = TempDir::new().unwrap();
    let model = gen(
        dir.path(),
        "m.json",
        &["--agents", "11", "--substates", "1", "--actions", "2"],
    );
    let run = timdp(&[
        "cluster",
        "--model",
        model.to_str().unwrap(),
        "--k",
        "2",
        "--method",
        "brute",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 6);
}

#[test]
fn bench_writes_timings() {
    let dir = TempDir::new().unwrap();
    let model = separable(dir.path(), "3");
    ok(&[
        "bench",
        "--model",
        model.to_str().unwrap(),
        "--repetitions",
        "2",
        "--cluster-counts",
        "1,2,3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    let rows = csv::Reader::from_path(dir.path().join("bench.csv"))
        .unwrap()
        .into_records()
        .count();
    assert_eq!(rows, 6);
    let bench = read_json(&dir.path().join("bench.json"));
    assert!(!bench["result"]["ratios"].as_array().unwrap().is_empty());
}

#[test]
fn channel_model_has_expected_shape() {
    let dir = TempDir::new().unwrap();
    let model = gen(dir.path(), "ch.json", &["--kind", "channel", "--seed", "3"]);
    let spec = read_json(&model);
    assert_eq!(spec["agents"].as_array().unwrap().len(), 6);
    assert_eq!(spec["gamma"], 0.9);
}

fn repro(experiment: &str, extra: &[&str]) -> Value {
    let dir = TempDir::new().unwrap();
    let mut args = vec![
        "repro",
        experiment,
        "--out-dir",
        dir.path().to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ok(&args);
    assert!(dir.path().join(format!("{experiment}.csv")).exists());
    read_json(&dir.path().join(format!("{experiment}.json")))["result"].clone()
}

fn assert_checks_pass(report: &Value) {
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for check in checks {
        assert_eq!(check["pass"], true, "{check}");
    }
}

#[test]
fn separable_experiment_passes_its_checks() {
    let report = repro("fig-sep", &["--agents", "4"]);
    assert_checks_pass(&report);
    // one cvi and one vi row per cluster count, each over S(4, C) clusterings
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let counts: Vec<u64> = rows
        .iter()
        .step_by(2)
        .map(|r| r["assignments"].as_u64().unwrap())
        .collect();
    assert_eq!(counts, vec![1, 7, 6, 1]);
    assert_eq!(report["norm"], "euclidean");
}

#[test]
fn coupled_experiment_keeps_values_in_certificate() {
    let report = repro("fig-nonsep", &["--agents", "4", "--sample", "3"]);
    assert_checks_pass(&report);
    let rows = report["rows"].as_array().unwrap();
    let last_vi = rows.last().unwrap();
    assert_eq!(last_vi["solver"], "vi");
    assert!((last_vi["mean_normalized_value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let counts: Vec<u64> = rows
        .iter()
        .step_by(2)
        .map(|r| r["assignments"].as_u64().unwrap())
        .collect();
    assert_eq!(counts, vec![1, 3, 3, 1]);
}

#[test]
fn greedy_experiment_passes_its_checks() {
    let report = repro("fig-gc", &["--agents", "6"]);
    assert_checks_pass(&report);
    assert_eq!(report["rows"].as_array().unwrap().len(), 6);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cenet_cli::montecarlo::{run_bench, BenchConfig, Method};
use cenet_core::{NoiseFamily, Scenario};
use serde_json::Value;
use tempfile::TempDir;

fn cenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cenet")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, contents).unwrap();
    path
}

fn json(output: &Output) -> Value {
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    serde_json::from_slice(&output.stdout).unwrap()
}

const TOY: &str = "x1,x2,y\n1,3,1\n2,1,2\n3,2,3\n";

#[test]
fn fit_picks_up_identical_column() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.csv", TOY);
    let report = json(&cenet(&["fit", "--input", path_str(&input), "--alpha1", "1e-6"]));
    assert_ne!(report["beta"][0].as_f64().unwrap(), 0.0);
    assert_eq!(report["selected"][0], "x1");
    assert_eq!(report["converged"], true);
}

#[test]
fn fit_above_threshold_is_zero() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.csv", TOY);
    let first = json(&cenet(&["fit", "--input", path_str(&input), "--alpha1", "1e-6"]));
    let amax = first["alpha_max"].as_f64().unwrap().to_string();
    let report = json(&cenet(&["fit", "--input", path_str(&input), "--alpha1", &amax]));
    assert_eq!(report["nnz"], 0);
    assert!(report["beta"]
        .as_array()
        .unwrap()
        .iter()
        .all(|b| b.as_f64() == Some(0.0)));
}

#[test]
fn malformed_inputs_fail_with_exit_code_one() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.csv", "");
    let out = cenet(&["fit", "--input", path_str(&empty), "--alpha1", "0.1"]);
    assert_eq!(out.status.code(), Some(1));

    let bad = write(&dir, "bad.csv", "x1,y\n1,2\n2,NA\n3,4\n");
    let out = cenet(&["fit", "--input", path_str(&bad), "--alpha1", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let input = write(&dir, "toy.csv", TOY);
    let out = cenet(&["fit", "--input", path_str(&input), "--response", "z", "--alpha1", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_files_reject_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.csv", TOY);
    let cfg = write(&dir, "cfg.json", r#"{"alpha1": 0.01, "alpah2": 1}"#);
    let out = cenet(&["fit", "--input", path_str(&input), "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));

    let cfg = write(&dir, "ok.json", r#"{"alpha1": 0.01, "alpha2": 0.5}"#);
    let report = json(&cenet(&[
        "fit",
        "--input",
        path_str(&input),
        "--config",
        path_str(&cfg),
    ]));
    assert_eq!(report["alpha2"], 0.5);
}

#[test]
fn iteration_cap_gives_exit_code_two() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "toy.csv", TOY);
    let cfg = write(&dir, "cfg.json", r#"{"alpha1": 1e-6, "max_outer_iter": 1}"#);
    let out = cenet(&["fit", "--input", path_str(&input), "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["converged"], false);
    assert!(report["warning"].is_string());
}

#[test]
fn randomized_commands_require_a_seed() {
    let dir = TempDir::new().unwrap();
    let out = cenet(&["simulate", "--n", "10", "--p", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    let input = write(&dir, "toy.csv", TOY);
    let out = cenet(&["stability", "--input", path_str(&input), "--b", "2", "--screen-k", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = cenet(&["bench", "--reps", "1", "--out-dir", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bench_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = cenet(&[
            "bench",
            "--n",
            "60",
            "--p",
            "12",
            "--reps",
            "1",
            "--seed",
            "5",
            "--noise",
            "normal",
            "--noise",
            "centralized-gamma",
            "--out-dir",
            path_str(&out_dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    // 2 scenarios x 2 noises x 2 methods x (error, roc) + bench.json
    assert_eq!(names.len(), 17);
    for name in names {
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
    let error_csv = fs::read_to_string(a.join("identity-normal-cenet-error.csv")).unwrap();
    assert!(error_csv.starts_with("alpha,mean_nnz,mean_error\n"));
    let report: Value = serde_json::from_str(&fs::read_to_string(a.join("bench.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["seed"], 5);
}

#[test]
fn bench_thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    let run = |jobs: &str| {
        let out_dir = dir.path().join(jobs);
        let out = cenet(&[
            "--jobs",
            jobs,
            "bench",
            "--n",
            "40",
            "--p",
            "8",
            "--reps",
            "4",
            "--seed",
            "3",
            "--scenario",
            "identity",
            "--noise",
            "normal",
            "--out-dir",
            path_str(&out_dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(out_dir.join("bench.json")).unwrap()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn cenet_error_curve_is_u_shaped() {
    let cfg = BenchConfig {
        scenarios: vec![Scenario::Identity],
        noises: vec![NoiseFamily::Normal],
        ..BenchConfig::new(20, 11)
    };
    let results = run_bench(&cfg).unwrap();
    let curve = &results
        .cell(Scenario::Identity, NoiseFamily::Normal, Method::Cenet)
        .unwrap()
        .error_curve;
    let errors: Vec<f64> = curve.points.iter().map(|p| p.mean_error).collect();
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min < errors[0] && min < *errors.last().unwrap(), "{errors:?}");
}

fn stability_csv(dir: &TempDir, input: &Path, out: &str, extra: &[&str]) -> String {
    let out_dir = dir.path().join(out);
    let mut args = vec![
        "stability",
        "--input",
        path_str(input),
        "--seed",
        "4",
        "--out-dir",
        path_str(&out_dir),
    ];
    args.extend_from_slice(extra);
    let out = cenet(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    fs::read_to_string(out_dir.join("stability.csv")).unwrap()
}

fn planted(dir: &TempDir) -> PathBuf {
    let mut s = String::from("signal,a,b,c,y\n");
    for i in 0..30 {
        let t = i as f64 / 7.0;
        let (a, b, c) = ((i * 7 % 11) as f64, (i * 5 % 13) as f64, ((i * 3) % 7) as f64 - 2.5);
        s.push_str(&format!("{t},{a},{b},{c},{}\n", t * t * t + 0.01 * a));
    }
    write(dir, "planted.csv", &s)
}

#[test]
fn stability_finds_planted_column_and_reruns_identically() {
    let dir = TempDir::new().unwrap();
    let input = planted(&dir);
    let extra = ["--b", "20", "--screen-k", "2"];
    let first = stability_csv(&dir, &input, "one", &extra);
    let second = stability_csv(&dir, &input, "two", &extra);
    assert_eq!(first, second);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("one/stability_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["top"][0]["name"], "signal");
    assert_eq!(summary["top"][0]["max_frequency"], 1.0);
}

#[test]
fn stability_grid_above_threshold_writes_zeros() {
    let dir = TempDir::new().unwrap();
    let input = planted(&dir);
    let csv = stability_csv(
        &dir,
        &input,
        "z",
        &["--b", "5", "--screen-k", "3", "--alpha1-grid", "5,2"],
    );
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("variable,5,2"));
    for line in lines {
        assert!(line.split(',').skip(1).all(|c| c == "0"), "{line}");
    }
}

#[test]
fn simulate_path_eval_pipeline() {
    let dir = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for seed in ["1", "2"] {
        let sim_dir = dir.path().join(format!("sim{seed}"));
        let out = cenet(&[
            "simulate",
            "--n",
            "80",
            "--p",
            "10",
            "--seed",
            seed,
            "--scenario",
            "cube-root",
            "--out-dir",
            path_str(&sim_dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let path_dir = dir.path().join(format!("path{seed}"));
        let out = cenet(&[
            "path",
            "--input",
            path_str(&sim_dir.join("data.csv")),
            "--alpha1-grid",
            "0.5:0.001:12",
            "--out-dir",
            path_str(&path_dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        reports.push(path_dir.join("path.json"));
    }
    let truth = dir.path().join("sim1/truth.json");
    let eval_dir = dir.path().join("eval");
    let out = cenet(&[
        "eval",
        "--input",
        path_str(&reports[0]),
        "--input",
        path_str(&reports[1]),
        "--truth",
        path_str(&truth),
        "--out-dir",
        path_str(&eval_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&fs::read_to_string(eval_dir.join("eval.json")).unwrap()).unwrap();
    assert_eq!(report["replicates"], 2);
    assert!(report["auc"].as_f64().unwrap() > 0.5);
    assert_eq!(report["error_curve"]["points"].as_array().unwrap().len(), 12);
    assert!(fs::read_to_string(eval_dir.join("roc.csv"))
        .unwrap()
        .starts_with("fpr,mean_tpr\n"));

    let path_csv = fs::read_to_string(dir.path().join("path1/path.csv")).unwrap();
    assert!(path_csv.starts_with("alpha1,nnz,converged,constraint_value,kkt_residual,x1,"));
}

#[test]
fn eval_rejects_mismatched_grids() {
    let dir = TempDir::new().unwrap();
    let sim_dir = dir.path().join("sim");
    assert!(cenet(&[
        "simulate",
        "--n",
        "40",
        "--p",
        "6",
        "--seed",
        "1",
        "--out-dir",
        path_str(&sim_dir)
    ])
    .status
    .success());
    let data = sim_dir.join("data.csv");
    for (name, grid) in [("p1", "0.5,0.1"), ("p2", "0.5,0.2")] {
        let out = cenet(&[
            "path",
            "--input",
            path_str(&data),
            "--alpha1-grid",
            grid,
            "--out-dir",
            path_str(&dir.path().join(name)),
        ]);
        assert!(out.status.success());
    }
    let out = cenet(&[
        "eval",
        "--input",
        path_str(&dir.path().join("p1/path.json")),
        "--input",
        path_str(&dir.path().join("p2/path.json")),
        "--truth",
        path_str(&sim_dir.join("truth.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

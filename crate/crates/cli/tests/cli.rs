use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn iris() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/iris.csv")
}

fn octree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_octree"))
        .args(args)
        .env("OCTREE_LOG", "error")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn conflict_pair_caps_accuracy_at_three() {
    let dir = TempDir::new().unwrap();
    let out = octree(&["train", p(&fixture("conflict.csv")), "--depth", "2", "--out", p(dir.path())]);
    assert!(out.status.success(), "{out:?}");
    let r = json(&dir.path().join("result.json"));
    assert_eq!(r["objective"], 3.0);
    assert_eq!(r["gap"], 0.0);
    assert_eq!(r["status"], "optimal");
    for f in ["tree.json", "tree.dot", "solve.log", "rules.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.csv");
    for args in [
        vec!["binarize", p(&missing), "--out", p(dir.path())],
        vec!["train", p(&missing)],
    ] {
        let out = octree(&args);
        assert_eq!(out.status.code(), Some(2));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(octree(&["train", "--depth", "deep"]).status.code(), Some(1));
    assert_eq!(octree(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(octree(&["train", p(&iris()), "--objective", "nonsense"]).status.code(), Some(1));
    assert_eq!(octree(&["--help"]).status.code(), Some(0));
}

#[test]
fn binarize_reports_iris_unique_count() {
    let dir = TempDir::new().unwrap();
    let out = octree(&["binarize", p(&iris()), "--out", p(dir.path())]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("unique 24"), "{}", stdout(&out));
    let csv = fs::read_to_string(dir.path().join("binarized.csv")).unwrap();
    assert_eq!(csv.lines().count(), 151);
}

#[test]
fn binary_input_gets_two_columns_per_feature() {
    let dir = TempDir::new().unwrap();
    let out = octree(&["binarize", p(&fixture("conflict.csv")), "--out", p(dir.path())]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("columns 8"), "{}", stdout(&out));
}

#[test]
fn export_mps_is_written_before_the_solve() {
    let dir = TempDir::new().unwrap();
    let mps = dir.path().join("model.mps");
    // A zero node limit still leaves the exported file behind.
    let out = octree(&[
        "train",
        p(&fixture("conflict.csv")),
        "--out",
        p(dir.path()),
        "--export-mps",
        p(&mps),
        "--node-limit",
        "0",
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&mps).unwrap();
    assert!(text.starts_with("NAME"));
    assert!(text.trim_end().ends_with("ENDATA"));
}

#[test]
fn export_command_picks_format_from_extension() {
    let dir = TempDir::new().unwrap();
    let lp = dir.path().join("model.lp");
    let out = octree(&["export", p(&fixture("conflict.csv")), "--depth", "1", "--output", p(&lp)]);
    assert!(out.status.success(), "{out:?}");
    assert!(fs::read_to_string(&lp).unwrap().contains("Subject To"));
    let bad = octree(&["export", p(&fixture("conflict.csv")), "--output", p(&dir.path().join("m.txt"))]);
    assert_eq!(bad.status.code(), Some(1));
}

fn write_tree(dir: &Path, leaf_right: u32) -> PathBuf {
    // Column 6 is "d<=0.5"; instances with d = 0 go right.
    let tree = serde_json::json!({
        "depth": 1,
        "n_features": 8,
        "nodes": [
            { "id": 1, "role": "branch", "feature": 6 },
            { "id": 2, "role": "leaf", "label": 0 },
            { "id": 3, "role": "leaf", "label": leaf_right },
        ]
    });
    let path = dir.join(format!("tree{leaf_right}.json"));
    fs::write(&path, tree.to_string()).unwrap();
    path
}

fn evaluate_csv(args: &[&str]) -> Vec<(String, f64)> {
    let out = octree(args);
    assert!(out.status.success(), "{out:?}");
    stdout(&out)
        .lines()
        .skip(1)
        .map(|l| {
            let (m, v) = l.split_once(',').unwrap();
            (m.to_string(), v.parse().unwrap())
        })
        .collect()
}

fn separable(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("sep.csv");
    fs::write(&data, "a,b,c,d,y\n0,1,0,0,0\n0,1,1,0,0\n1,0,1,1,1\n0,0,1,1,1\n1,1,0,0,0\n").unwrap();
    let rules_dir = dir.join("rules");
    assert!(octree(&["binarize", p(&data), "--out", p(&rules_dir)]).status.success());
    (data, rules_dir.join("rules.json"))
}

#[test]
fn perfect_tree_scores_one_on_every_ratio_metric() {
    let dir = TempDir::new().unwrap();
    let (data, rules) = separable(dir.path());
    let tree = write_tree(dir.path(), 0);
    let flipped = dir.path().join("flipped.json");
    let mut t = json(&tree);
    t["nodes"][1]["label"] = 1.into();
    fs::write(&flipped, t.to_string()).unwrap();
    let rows = evaluate_csv(&["evaluate", "--tree", p(&flipped), p(&data), "--rules", p(&rules), "--format", "csv"]);
    assert_eq!(rows.len(), 7);
    for (m, v) in rows {
        assert!((v - 1.0).abs() < 1e-12, "{m} = {v}");
    }
}

#[test]
fn all_negative_tree_has_zero_mcc_and_f1() {
    let dir = TempDir::new().unwrap();
    let (data, rules) = separable(dir.path());
    let tree = write_tree(dir.path(), 0);
    let rows = evaluate_csv(&[
        "evaluate",
        "--tree",
        p(&tree),
        p(&data),
        "--rules",
        p(&rules),
        "--metrics",
        "mcc,f1",
        "--format",
        "csv",
    ]);
    assert_eq!(rows, vec![("mcc".to_string(), 0.0), ("f1".to_string(), 0.0)]);
}

#[test]
fn evaluate_rejects_feature_arity_mismatch() {
    let dir = TempDir::new().unwrap();
    let tree = write_tree(dir.path(), 1);
    let out = octree(&["evaluate", "--tree", p(&tree), p(&iris())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_on_training_split_reproduces_train_metric() {
    let dir = TempDir::new().unwrap();
    let out = octree(&[
        "train",
        p(&fixture("noisy.csv")),
        "--depth",
        "1",
        "--objective",
        "mcc",
        "--split",
        "0.6,0.2,0.2",
        "--seed",
        "3",
        "--out",
        p(dir.path()),
    ]);
    assert!(out.status.success(), "{out:?}");
    let reported = json(&dir.path().join("result.json"))["metric_value"].as_f64().unwrap();
    let rows = evaluate_csv(&[
        "evaluate",
        "--tree",
        p(&dir.path().join("tree.json")),
        p(&dir.path().join("train.csv")),
        "--binarized",
        "--metrics",
        "mcc",
        "--format",
        "csv",
    ]);
    assert!((rows[0].1 - reported).abs() < 1e-12, "{} vs {reported}", rows[0].1);
    assert!(dir.path().join("holdout.json").exists());
}

#[test]
fn oracle_check_passes_and_catches_a_crippled_solver() {
    let data = fixture("conflict.csv");
    let ok = octree(&["oracle-check", p(&data), "--depth", "2"]);
    assert!(ok.status.success(), "{ok:?}");
    assert!(stdout(&ok).starts_with("PASS"));
    // With no search and no warm start the solver returns an inferior tree.
    let bad = octree(&["oracle-check", p(&data), "--depth", "2", "--node-limit", "0", "--no-warm-start"]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(stdout(&bad).contains("solver 2 oracle 3"), "{}", stdout(&bad));
}

#[test]
fn oracle_check_on_separable_data_scores_all_instances() {
    let dir = TempDir::new().unwrap();
    let (data, _) = separable(dir.path());
    let ok = octree(&["oracle-check", p(&data), "--depth", "1"]);
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("objective 5 "), "{}", stdout(&ok));
}

fn read_results(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn benchmark_runs_the_cartesian_product_and_appends_a_summary() {
    let dir = TempDir::new().unwrap();
    let sets = format!("{},{}", p(&fixture("conflict.csv")), p(&iris()));
    let out = octree(&[
        "benchmark",
        "--datasets",
        &sets,
        "--depths",
        "1,2",
        "--objectives",
        "accuracy",
        "--jobs",
        "2",
        "--out",
        p(dir.path()),
    ]);
    assert!(out.status.success(), "{out:?}");
    let rows = read_results(&dir.path().join("results.csv"));
    assert_eq!(rows[0].join(","), "dataset,depth,objective,time,ub,lb,gap,objective_value,status");
    assert_eq!(rows.len(), 1 + 4 + 1);
    assert_eq!(rows[5][0], "summary");
    for row in &rows[1..5] {
        let ub: f64 = row[4].parse().unwrap();
        let lb: f64 = row[5].parse().unwrap();
        let gap: f64 = row[6].parse().unwrap();
        let expected = if ub.abs() > 0.0 { 100.0 * (ub - lb) / ub.abs() } else { 0.0 };
        assert!((gap - expected).abs() < 1e-9);
    }
}

#[test]
fn benchmark_records_failures_and_keeps_going() {
    let dir = TempDir::new().unwrap();
    // MCC needs binary labels, so the iris run fails while the other succeeds.
    let sets = format!("{},{}", p(&iris()), p(&fixture("conflict.csv")));
    let results = dir.path().join("r.csv");
    let out = octree(&["benchmark", "--datasets", &sets, "--objectives", "mcc", "--depths", "1", "--results", p(&results)]);
    assert!(out.status.success());
    let rows = read_results(&results);
    assert!(rows[1][8].starts_with("error"));
    assert_eq!(rows[2][8], "optimal");
    assert_eq!(rows[3][8], "1/2 optimal");
}

#[test]
fn one_second_limit_reports_time_limit_with_an_incumbent() {
    let dir = TempDir::new().unwrap();
    let out = octree(&[
        "train",
        p(&fixture("noisy.csv")),
        "--depth",
        "3",
        "--objective",
        "f1",
        "--time-limit",
        "1",
        "--out",
        p(dir.path()),
    ]);
    assert!(out.status.success(), "{out:?}");
    let r = json(&dir.path().join("result.json"));
    assert_eq!(r["status"], "time_limit");
    assert!(r["metric_value"].as_f64().unwrap() > 0.0);
    assert!(r["gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "[data]\npath = {}\n[model]\ndepth = 1\nobjective = ba\n[output]\ndir = {}\n",
            p(&fixture("conflict.csv")),
            p(dir.path())
        ),
    )
    .unwrap();
    assert!(octree(&["train", "--config", p(&cfg)]).status.success());
    let r = json(&dir.path().join("result.json"));
    assert_eq!(r["depth"], 1);
    assert_eq!(r["metric"], "ba");
    assert!(octree(&["train", "--config", p(&cfg), "--depth", "2"]).status.success());
    assert_eq!(json(&dir.path().join("result.json"))["depth"], 2);
    fs::write(&cfg, "[model]\ndepht = 2\n").unwrap();
    assert_eq!(octree(&["train", "--config", p(&cfg)]).status.code(), Some(1));
}

#[test]
fn repeated_training_gives_identical_outputs_apart_from_timing() {
    let runs: Vec<TempDir> = (0..2).map(|_| TempDir::new().unwrap()).collect();
    for dir in &runs {
        let out = octree(&[
            "train",
            p(&iris()),
            "--depth",
            "2",
            "--split",
            "0.5,0.25,0.25",
            "--seed",
            "11",
            "--out",
            p(dir.path()),
        ]);
        assert!(out.status.success());
    }
    for f in ["tree.json", "tree.dot", "rules.json", "train.csv", "holdout.json"] {
        let a = fs::read(runs[0].path().join(f)).unwrap();
        let b = fs::read(runs[1].path().join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let strip = |dir: &TempDir| {
        let mut v = json(&dir.path().join("result.json"));
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(strip(&runs[0]), strip(&runs[1]));
}

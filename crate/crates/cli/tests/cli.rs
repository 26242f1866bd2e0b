use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ects(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ects")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let path = dir.join(name);
    let out = ects(&["synth", "--out", path_str(&path), "--seed", &seed.to_string(), "--series", "120", "--length", "30"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn bench(data: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["benchmark", "--data", data, "--out", path_str(out), "--alpha", "0.1", "--k-range", "1..3"];
    args.extend_from_slice(extra);
    ects(&args)
}

#[test]
fn synth_writes_requested_shape() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth(dir.path(), "s.tsv", 1);
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 120);
    assert!(lines.iter().all(|l| l.split('\t').count() == 31));
}

#[test]
fn benchmark_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = synth(dir.path(), "good.tsv", 2);
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "garbage\n").unwrap();

    let ok = bench(path_str(&good), &dir.path().join("ok"), &["--methods", "economy-gamma,sr"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let csv = fs::read_to_string(dir.path().join("ok/results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let both = format!("{},{}", path_str(&good), path_str(&bad));
    let partial = bench(&both, &dir.path().join("partial"), &["--methods", "sr"]);
    assert_eq!(partial.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&partial.stderr).contains("quarantined bad"));

    let fatal = bench(path_str(&bad), &dir.path().join("fatal"), &["--methods", "sr"]);
    assert_eq!(fatal.status.code(), Some(1));

    assert_eq!(ects(&["benchmark", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(ects(&["benchmark", "--data", path_str(&good), "--methods", "nope"]).status.code(), Some(1));
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let good = synth(dir.path(), "good.tsv", 3);
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("data = {}\nmethods = economy-k\nalpha = 0.5\nseed = 4\n", path_str(&good))).unwrap();
    let out = dir.path().join("out");
    let status = ects(&["benchmark", "--config", path_str(&cfg), "--alpha", "0.1", "--out", path_str(&out), "--myopic"]);
    assert!(status.status.success());
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let methods: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(methods, ["economy-k", "economy-k-myopic"]);
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0.1")));
}

#[test]
fn compare_pareto_and_select_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for seed in 0..6 {
        files.push(synth(dir.path(), &format!("d{seed}.tsv"), 10 + seed));
    }
    let data = files.iter().map(|p| path_str(p)).collect::<Vec<_>>().join(",");
    let out = dir.path().join("res");
    let run = ects(&[
        "benchmark", "--data", &data, "--out", path_str(&out), "--alpha", "0.01,0.1",
        "--methods", "economy-gamma,economy-k,sr", "--k-range", "1..3",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let w = ects(&["compare", path_str(&out), "--test", "wilcoxon", "--reference", "economy-gamma"]);
    assert!(w.status.success(), "{}", String::from_utf8_lossy(&w.stderr));
    let json: serde_json::Value = serde_json::from_slice(&w.stdout).unwrap();
    assert!(json.as_array().is_some_and(|a| !a.is_empty()));

    // six datasets are too few for Friedman + Nemenyi
    assert_eq!(ects(&["compare", path_str(&out), "--test", "nemenyi"]).status.code(), Some(1));

    let p = ects(&["pareto", path_str(&out)]);
    assert!(p.status.success());
    let table = String::from_utf8(p.stdout).unwrap();
    assert_eq!(table.lines().count(), 1 + 3 * 2);

    let s = ects(&["select-alpha", path_str(&out)]);
    assert!(s.status.success());
    assert_eq!(String::from_utf8(s.stdout).unwrap().lines().count(), 1 + 6);
}

#[test]
fn train_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "d.tsv", 7);
    let model = dir.path().join("model.json");
    let t = ects(&[
        "train", "--data", path_str(&data), "--methods", "economy-gamma-lite", "--alpha", "0.01",
        "--k-range", "1..4", "--out", path_str(&model),
    ]);
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    let report: serde_json::Value = serde_json::from_slice(&t.stdout).unwrap();
    assert_eq!(report["method"], "economy-gamma-lite");

    let eval_dir = dir.path().join("eval");
    let e = ects(&["evaluate", "--model", path_str(&model), "--data", path_str(&data), "--out", path_str(&eval_dir)]);
    assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
    let metrics: serde_json::Value = serde_json::from_slice(&e.stdout).unwrap();
    assert!(metrics["avg_cost"].as_f64().unwrap() >= 0.0);
    let decisions = fs::read_to_string(eval_dir.join("decisions.csv")).unwrap();
    assert_eq!(decisions.lines().count(), 121);

    let sr = ects(&["train", "--data", path_str(&data), "--methods", "sr", "--alpha", "0.01", "--out", path_str(&model)]);
    assert_eq!(sr.status.code(), Some(1));
}

use std::fs;

use economy::bench::{read_results_csv, run_benchmark, RESULTS_FILE, SUMMARY_FILE};
use economy::config::Method;
use economy::dataset::write_ucr_tsv;
use economy::synth::{generate, SynthSpec};
use economy::trigger::Variant;
use economy::RunConfig;

fn write_synth(dir: &std::path::Path, name: &str, seed: u64) -> std::path::PathBuf {
    let path = dir.join(name);
    let data = generate(&SynthSpec {
        series: 120,
        length: 30,
        seed,
        ..SynthSpec::default()
    })
    .unwrap();
    write_ucr_tsv(&data, &path).unwrap();
    path
}

fn config(data: Vec<std::path::PathBuf>, out: std::path::PathBuf) -> RunConfig {
    RunConfig {
        data,
        out,
        alphas: vec![0.1],
        methods: vec![Method::economy(Variant::Gamma), Method::Sr],
        k_range: (1, 4),
        ..RunConfig::default()
    }
}

#[test]
fn one_dataset_two_methods_gives_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_synth(dir.path(), "toy.tsv", 1);
    let out = dir.path().join("out");
    let outcome = run_benchmark(&config(vec![file], out.clone())).unwrap();
    assert!(!outcome.is_partial());
    let rows = read_results_csv(out.join(RESULTS_FILE)).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].method, "economy-gamma");
    assert!(rows[0].k.is_some() && rows[0].sr_params().is_none());
    assert_eq!(rows[1].method, "sr");
    assert!(rows[1].sr_params().is_some() && rows[1].k.is_none());
    assert!(rows.iter().all(|r| r.config_hash == outcome.summary.config_hash));
    assert!(out.join(SUMMARY_FILE).exists());
}

#[test]
fn broken_dataset_is_quarantined() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_synth(dir.path(), "good.tsv", 2);
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "1\t0.5\tnot-a-number\n").unwrap();
    let out = dir.path().join("out");
    let outcome = run_benchmark(&config(vec![good, bad], out)).unwrap();
    assert!(outcome.is_partial());
    assert_eq!(outcome.summary.datasets, vec!["good".to_string()]);
    assert_eq!(outcome.summary.quarantined.len(), 1);
    assert_eq!(outcome.summary.quarantined[0].dataset, "bad");
    assert_eq!(outcome.rows.len(), 2);
}

#[test]
fn reruns_and_worker_counts_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = vec![write_synth(dir.path(), "a.tsv", 3), write_synth(dir.path(), "b.tsv", 4)];
    let mut first = config(data.clone(), dir.path().join("one"));
    first.workers = 1;
    let mut second = config(data, dir.path().join("two"));
    second.workers = 3;
    run_benchmark(&first).unwrap();
    run_benchmark(&second).unwrap();
    let a = fs::read(first.out.join(RESULTS_FILE)).unwrap();
    let b = fs::read(second.out.join(RESULTS_FILE)).unwrap();
    assert_eq!(a, b);
}

use economy::bench::{fit_candidates, prepare, select_k, train_model};
use economy::config::Method;
use economy::cost::CostModel;
use economy::dataset::{Dataset, LabeledSeries};
use economy::evaluation::{avg_cost, run_trigger};
use economy::stats::average_ranks;
use economy::synth::{generate, SynthSpec};
use economy::trigger::{Horizon, Variant};
use economy::{EarlyClassifier, LogisticConfig, RunConfig};

fn data(seed: u64) -> Dataset {
    generate(&SynthSpec {
        series: 200,
        length: 40,
        seed,
        ..SynthSpec::default()
    })
    .unwrap()
}

#[test]
fn splits_partition_the_binarized_data() {
    let raw = data(1);
    let p = prepare(&raw, 3, 0.05, &LogisticConfig::default()).unwrap();
    let s = &p.splits;
    assert_eq!(s.classifier_train.len(), 56);
    assert_eq!(s.meta_train.len(), 56);
    assert_eq!(s.k_tuning.len(), 28);
    assert_eq!(s.test.len(), 60);
    assert_eq!(p.grid.times().last(), Some(&40));
    assert_eq!(p.meta.len(), 56);
}

#[test]
fn every_variant_trains_and_decides_on_the_test_split() {
    let raw = data(2);
    let p = prepare(&raw, 0, 0.05, &LogisticConfig::default()).unwrap();
    let cost = CostModel::zero_one(0.01, p.grid.length()).unwrap();
    for v in Variant::ALL {
        let cands = fit_candidates(v, &p.meta, &p.grid, (1, 5), 0).unwrap();
        assert_eq!(cands.len(), 5);
        for horizon in [Horizon::Full, Horizon::Myopic] {
            let (model, tuning) = select_k(&cands, &p.tuning, &cost, horizon).unwrap();
            assert!((1..=5).contains(&model.k));
            assert!(tuning.is_finite());
            let records = run_trigger(&model, &p.test).unwrap();
            assert_eq!(records.len(), p.test.len());
            assert!(avg_cost(&records).unwrap() <= 1.0 + 0.01);
        }
    }
}

#[test]
fn homogeneous_information_selects_one_group() {
    // every series is pure noise, so grouping cannot help
    let raw = generate(&SynthSpec {
        series: 200,
        length: 30,
        onset: 1.0,
        seed: 4,
        ..SynthSpec::default()
    })
    .unwrap();
    let p = prepare(&raw, 4, 0.05, &LogisticConfig::default()).unwrap();
    let cost = CostModel::zero_one(1.0, p.grid.length()).unwrap();
    let cands = fit_candidates(Variant::K, &p.meta, &p.grid, (1, 4), 4).unwrap();
    let (model, _) = select_k(&cands, &p.tuning, &cost, Horizon::Full).unwrap();
    let records = run_trigger(&model, &p.test).unwrap();
    assert!(records.iter().all(|r| r.step == 0));
}

#[test]
fn training_is_deterministic_and_round_trips() {
    let raw = data(5);
    let cfg = RunConfig {
        k_range: (1, 6),
        seed: 11,
        ..RunConfig::default()
    };
    let method = Method::economy(Variant::Gamma);
    let (a, ra) = train_model(&raw, method, 0.01, &cfg).unwrap();
    let (b, rb) = train_model(&raw, method, 0.01, &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(ra.k, rb.k);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    a.save(&path).unwrap();
    let loaded = EarlyClassifier::load(&path).unwrap();
    for s in raw.series().iter().take(50) {
        assert_eq!(a.decide(&s.values).unwrap(), loaded.decide(&s.values).unwrap());
    }
}

#[test]
fn sr_cannot_be_saved_as_a_model() {
    assert!(train_model(&data(6), Method::Sr, 0.01, &RunConfig::default()).is_err());
}

#[test]
fn too_small_dataset_is_rejected() {
    let series = (0..6)
        .map(|i| LabeledSeries::new(vec![i as f64; 10], (i % 2) as i64).unwrap())
        .collect();
    let raw = Dataset::new(series).unwrap();
    assert!(prepare(&raw, 0, 0.05, &LogisticConfig::default()).is_err());
}

#[test]
fn held_out_accuracy_rises_with_time() {
    for seed in 0..4 {
        let p = prepare(&data(seed), seed, 0.05, &LogisticConfig::default()).unwrap();
        let accuracy: Vec<f64> = (0..p.grid.len())
            .map(|s| {
                let hits = (0..p.test.len())
                    .filter(|&i| economy::predict(p.test.scores[i][s]) == p.test.label(i))
                    .count();
                hits as f64 / p.test.len() as f64
            })
            .collect();
        let steps: Vec<f64> = (0..accuracy.len()).map(|s| s as f64).collect();
        let rho = pearson(&average_ranks(&steps), &average_ranks(&accuracy));
        assert!(rho > 0.0, "seed {seed}: spearman {rho}");
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

//! The end-to-end protocol: binarize, split, train the classifier chain,
//! fit every trigger, select K and SR parameters on held-out data, and
//! score everything on the test split.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{sr_tune, SrParams};
use crate::classifier::{ClassifierChain, LogisticConfig, ScoredSet};
use crate::config::{Method, RunConfig};
use crate::cost::CostModel;
use crate::dataset::{
    binarize_against, load_ucr_tsv, majority_class, make_splits, ClassId, Dataset, SplitBundle, TimestampGrid,
};
use crate::document::EarlyClassifier;
use crate::error::{Error, Result};
use crate::evaluation::{posthoc_optimal_cost, run_sr, run_trigger, Metrics, RunRecord};
use crate::report::{alpha_statistics, AlphaStatistics};
use crate::trigger::{self, Horizon, TriggerModel, Variant};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Files making up one dataset; they are concatenated on load.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSource {
    pub name: String,
    pub files: Vec<PathBuf>,
}

fn is_data_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("tsv") || e.eq_ignore_ascii_case("txt"))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .or_else(|| path.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// `Foo_TRAIN` and `Foo_TEST` both map to `Foo`; the second item orders
/// training files first.
fn split_key(path: &Path) -> (String, u8) {
    let s = stem(path);
    for (suffix, rank) in [("_TRAIN", 0), ("_TEST", 1)] {
        if let Some(base) = s.strip_suffix(suffix) {
            return (base.to_string(), rank);
        }
    }
    (s, 2)
}

fn sorted_entries(dir: &Path) -> Vec<PathBuf> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default();
    entries.sort();
    entries
}

/// Expands data paths into datasets. A file is one dataset. A directory
/// yields one dataset per subdirectory (all its data files) and one per
/// group of `<name>_TRAIN` / `<name>_TEST` / other `.tsv`/`.txt` files.
/// Unreadable paths are kept so that loading reports the error.
pub fn discover(paths: &[PathBuf]) -> Vec<DatasetSource> {
    let mut out = Vec::new();
    for path in paths {
        if !path.is_dir() {
            out.push(DatasetSource {
                name: stem(path),
                files: vec![path.clone()],
            });
            continue;
        }
        let mut groups: BTreeMap<String, Vec<(u8, PathBuf)>> = BTreeMap::new();
        for entry in sorted_entries(path) {
            if entry.is_dir() {
                let mut files: Vec<(u8, PathBuf)> = sorted_entries(&entry)
                    .into_iter()
                    .filter(|f| is_data_file(f))
                    .map(|f| (split_key(&f).1, f))
                    .collect();
                if files.is_empty() {
                    continue;
                }
                files.sort();
                out.push(DatasetSource {
                    name: stem(&entry),
                    files: files.into_iter().map(|(_, f)| f).collect(),
                });
            } else if is_data_file(&entry) {
                let (key, rank) = split_key(&entry);
                groups.entry(key).or_default().push((rank, entry));
            }
        }
        for (name, mut files) in groups {
            files.sort();
            out.push(DatasetSource {
                name,
                files: files.into_iter().map(|(_, f)| f).collect(),
            });
        }
    }
    out
}

pub fn load_source(source: &DatasetSource) -> Result<Dataset> {
    let mut files = source.files.iter();
    let first = files
        .next()
        .ok_or_else(|| Error::InvalidDataset(format!("{} has no files", source.name)))?;
    let mut data = load_ucr_tsv(first)?;
    for f in files {
        data = data.concat(load_ucr_tsv(f)?)?;
    }
    Ok(data)
}

/// A dataset after binarization, splitting and chain training, with every
/// held-out subset already scored.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Original class mapped to label 1.
    pub positive_class: ClassId,
    pub grid: TimestampGrid,
    pub chain: ClassifierChain,
    pub splits: SplitBundle,
    /// Subset b.
    pub meta: ScoredSet,
    /// Subset c.
    pub tuning: ScoredSet,
    pub test: ScoredSet,
}

pub fn prepare(raw: &Dataset, seed: u64, grid_fraction: f64, classifier: &LogisticConfig) -> Result<Prepared> {
    let positive_class = majority_class(raw)?;
    let data = binarize_against(raw, positive_class)?;
    let splits = make_splits(&data, seed)?;
    let grid = TimestampGrid::fractional(data.length(), grid_fraction)?;
    let chain = ClassifierChain::train(&splits.classifier_train, &grid, classifier)?;
    let meta = ScoredSet::new(splits.meta_train.clone(), &chain)?;
    let tuning = ScoredSet::new(splits.k_tuning.clone(), &chain)?;
    let test = ScoredSet::new(splits.test.clone(), &chain)?;
    Ok(Prepared {
        positive_class,
        grid,
        chain,
        splits,
        meta,
        tuning,
        test,
    })
}

/// Trains `variant` for every K in the inclusive range that the meta set can
/// support, in ascending K. Tables do not depend on the cost model, so the
/// models can be reused across delay slopes via [`TriggerModel::with_cost`].
pub fn fit_candidates(
    variant: Variant,
    meta: &ScoredSet,
    grid: &TimestampGrid,
    k_range: (usize, usize),
    seed: u64,
) -> Result<Vec<TriggerModel>> {
    let hi = k_range.1.min(meta.len());
    if k_range.0 > hi {
        return Err(Error::NotEnoughPoints {
            need: k_range.0,
            got: meta.len(),
        });
    }
    let placeholder = CostModel::zero_one(0.0, grid.length())?;
    (k_range.0..=hi)
        .map(|k| trigger::train(variant, meta, grid, k, seed, &placeholder))
        .collect()
}

/// Picks the candidate with the lowest AvgCost on `tuning` under `cost`;
/// the smallest K wins ties. Returns the configured model and its tuning
/// AvgCost.
pub fn select_k(
    candidates: &[TriggerModel],
    tuning: &ScoredSet,
    cost: &CostModel,
    horizon: Horizon,
) -> Result<(TriggerModel, f64)> {
    let mut best: Option<(TriggerModel, f64)> = None;
    for candidate in candidates {
        let model = candidate.clone().with_cost(cost.clone()).with_horizon(horizon);
        let avg = crate::evaluation::avg_cost(&run_trigger(&model, tuning)?)?;
        if best.as_ref().is_none_or(|(_, b)| avg < *b) {
            best = Some((model, avg));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no candidate models".into()))
}

/// One CSV row: a method evaluated on one dataset at one delay slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub alpha: f64,
    pub avg_cost: f64,
    pub earliness: f64,
    pub kappa: f64,
    pub delta_cost: f64,
    pub posthoc_cost: f64,
    /// AvgCost on the data used for selecting K or tuning SR.
    pub tuning_cost: f64,
    pub k: Option<usize>,
    pub sr_gamma1: Option<f64>,
    pub sr_gamma2: Option<f64>,
    pub sr_gamma3: Option<f64>,
    pub config_hash: String,
}

impl ResultRow {
    pub fn sr_params(&self) -> Option<SrParams> {
        Some(SrParams::new(self.sr_gamma1?, self.sr_gamma2?, self.sr_gamma3?))
    }
}

/// Runs every method at every slope on one loaded dataset.
pub fn run_dataset(name: &str, raw: &Dataset, config: &RunConfig, hash: &str) -> Result<Vec<ResultRow>> {
    let p = prepare(raw, config.seed, config.grid_fraction, &config.classifier)?;
    let length = p.grid.length();
    let costs = config
        .alphas
        .iter()
        .map(|&a| CostModel::zero_one(a, length))
        .collect::<Result<Vec<_>>>()?;
    let posthoc = costs
        .iter()
        .map(|c| posthoc_optimal_cost(&p.test, &p.grid, c))
        .collect::<Result<Vec<_>>>()?;
    let methods = config.effective_methods();
    let mut candidates: BTreeMap<Variant, Vec<TriggerModel>> = BTreeMap::new();
    let mut rows = Vec::new();
    let sr_set = if methods.contains(&Method::Sr) {
        Some(p.meta.union(&p.tuning)?)
    } else {
        None
    };
    for method in &methods {
        for (ai, cost) in costs.iter().enumerate() {
            let mut row = ResultRow {
                dataset: name.to_string(),
                method: method.name(),
                alpha: cost.alpha,
                avg_cost: 0.0,
                earliness: 0.0,
                kappa: 0.0,
                delta_cost: 0.0,
                posthoc_cost: posthoc[ai].avg_cost,
                tuning_cost: 0.0,
                k: None,
                sr_gamma1: None,
                sr_gamma2: None,
                sr_gamma3: None,
                config_hash: hash.to_string(),
            };
            let records: Vec<RunRecord> = match method {
                Method::Economy { variant, horizon } => {
                    if !candidates.contains_key(variant) {
                        let fitted = fit_candidates(*variant, &p.meta, &p.grid, config.k_range, config.seed)?;
                        candidates.insert(*variant, fitted);
                    }
                    let (model, tuning_cost) = select_k(&candidates[variant], &p.tuning, cost, *horizon)?;
                    row.k = Some(model.k);
                    row.tuning_cost = tuning_cost;
                    run_trigger(&model, &p.test)?
                }
                Method::Sr => {
                    let tuned = sr_tune(sr_set.as_ref().expect("built above"), &p.grid, cost)?;
                    row.sr_gamma1 = Some(tuned.params.gamma1);
                    row.sr_gamma2 = Some(tuned.params.gamma2);
                    row.sr_gamma3 = Some(tuned.params.gamma3);
                    row.tuning_cost = tuned.avg_cost;
                    run_sr(&tuned.params, &p.test, &p.grid, cost)?
                }
            };
            let m = Metrics::from_records(&records, length, &posthoc[ai])?;
            row.avg_cost = m.avg_cost;
            row.earliness = m.earliness;
            row.kappa = m.kappa;
            row.delta_cost = m.delta_cost;
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quarantined {
    pub dataset: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub config: RunConfig,
    pub datasets: Vec<String>,
    pub quarantined: Vec<Quarantined>,
    pub statistics: Vec<AlphaStatistics>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

impl BenchmarkOutcome {
    /// Some datasets failed but at least one succeeded.
    pub fn is_partial(&self) -> bool {
        !self.summary.quarantined.is_empty() && !self.summary.datasets.is_empty()
    }
}

/// Runs the protocol over every configured dataset without writing
/// anything. A failing dataset is quarantined and the rest continue.
pub fn execute(config: &RunConfig) -> Result<BenchmarkOutcome> {
    config.validate()?;
    if config.data.is_empty() {
        return Err(Error::Config("no data paths given".into()));
    }
    let hash = config.hash();
    let sources = discover(&config.data);
    let work = || -> Vec<(String, Result<Vec<ResultRow>>)> {
        sources
            .par_iter()
            .map(|s| {
                let rows = load_source(s).and_then(|raw| run_dataset(&s.name, &raw, config, &hash));
                (s.name.clone(), rows)
            })
            .collect()
    };
    let results = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    let mut rows = Vec::new();
    let mut datasets = Vec::new();
    let mut quarantined = Vec::new();
    for (name, result) in results {
        match result {
            Ok(r) => {
                datasets.push(name);
                rows.extend(r);
            }
            Err(e) => quarantined.push(Quarantined {
                dataset: name,
                error: e.to_string(),
            }),
        }
    }
    // stable: method and slope order within a dataset are preserved
    rows.sort_by(|a, b| a.dataset.cmp(&b.dataset));
    datasets.sort();
    let statistics = alpha_statistics(&rows);
    Ok(BenchmarkOutcome {
        rows,
        summary: Summary {
            config_hash: hash,
            config: config.clone(),
            datasets,
            quarantined,
            statistics,
        },
    })
}

pub fn write_results_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// [`execute`], then writes the CSV and JSON summary into the output
/// directory.
pub fn run_benchmark(config: &RunConfig) -> Result<BenchmarkOutcome> {
    let outcome = execute(config)?;
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    write_results_csv(&outcome.rows, config.out.join(RESULTS_FILE))?;
    let summary_path = config.out.join(SUMMARY_FILE);
    fs::write(&summary_path, serde_json::to_string_pretty(&outcome.summary)?)
        .map_err(|e| Error::io(&summary_path, e))?;
    Ok(outcome)
}

/// What `train_model` selected, and how the result scored on the test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub method: String,
    pub alpha: f64,
    pub k: usize,
    pub tuning_cost: f64,
    pub test: Metrics,
}

/// Trains one Economy method on one dataset with K selected on subset c and
/// bundles it with its classifier chain.
pub fn train_model(raw: &Dataset, method: Method, alpha: f64, config: &RunConfig) -> Result<(EarlyClassifier, TrainReport)> {
    let Method::Economy { variant, horizon } = method else {
        return Err(Error::InvalidParameter(
            "only economy methods produce a model document".into(),
        ));
    };
    let p = prepare(raw, config.seed, config.grid_fraction, &config.classifier)?;
    let cost = CostModel::zero_one(alpha, p.grid.length())?;
    let candidates = fit_candidates(variant, &p.meta, &p.grid, config.k_range, config.seed)?;
    let (model, tuning_cost) = select_k(&candidates, &p.tuning, &cost, horizon)?;
    let posthoc = posthoc_optimal_cost(&p.test, &p.grid, &cost)?;
    let test = Metrics::from_records(&run_trigger(&model, &p.test)?, p.grid.length(), &posthoc)?;
    let report = TrainReport {
        method: method.name(),
        alpha,
        k: model.k,
        tuning_cost,
        test,
    };
    Ok((EarlyClassifier::new(p.positive_class, p.chain, model)?, report))
}

/// Applies a saved model to every series of `raw`, mapping labels through
/// the model's positive class.
pub fn evaluate_model(doc: &EarlyClassifier, raw: &Dataset) -> Result<(Vec<RunRecord>, Metrics)> {
    let data = binarize_against(raw, doc.positive_class)?;
    let scored = ScoredSet::new(data, &doc.chain)?;
    let records = run_trigger(&doc.trigger, &scored)?;
    let posthoc = posthoc_optimal_cost(&scored, &doc.trigger.grid, &doc.trigger.cost)?;
    let metrics = Metrics::from_records(&records, doc.trigger.grid.length(), &posthoc)?;
    Ok((records, metrics))
}

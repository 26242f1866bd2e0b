//! `ects`: train, evaluate and benchmark early-classification triggers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use economy::bench::{self, RESULTS_FILE};
use economy::config::Method;
use economy::report;
use economy::synth::{self, SynthSpec};
use economy::trigger::Horizon;
use economy::{dataset, EarlyClassifier, RunConfig};

#[derive(Parser)]
#[command(name = "ects", version, about = "Cost-based early classification of time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one Economy method on one dataset and save the model document.
    Train(RunArgs),
    /// Apply a saved model to a dataset and report its metrics.
    Evaluate(EvaluateArgs),
    /// Run the full protocol over every dataset and write results.csv and summary.json.
    Benchmark(RunArgs),
    /// Statistical comparison of methods across datasets.
    Compare(CompareArgs),
    /// Mean earliness and kappa per method and slope, with dominance flags.
    Pareto(TableArgs),
    /// Pick, per dataset, the slope where methods differ most in AvgCost.
    SelectAlpha(TableArgs),
    /// Write a synthetic dataset whose classes separate after an onset time.
    Synth(SynthArgs),
}

/// Settings shared by `train` and `benchmark`. Flags override the config
/// file, which overrides the defaults.
#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset files or directories (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    data: Vec<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Delay-cost slopes, comma-separated.
    #[arg(long)]
    alpha: Option<String>,
    /// Methods, comma-separated (economy-k, economy-multi-k, economy-gamma-lite, economy-gamma, sr).
    #[arg(long)]
    methods: Option<String>,
    /// Inclusive range of group counts, e.g. 1..20.
    #[arg(long)]
    k_range: Option<String>,
    /// Spacing of the timestamp grid as a fraction of the length.
    #[arg(long)]
    grid_frac: Option<f64>,
    /// Output directory (benchmark) or model file (train).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset-level worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
    /// Add (benchmark) or use (train) the one-step-horizon rule.
    #[arg(long)]
    myopic: bool,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if !self.data.is_empty() {
            cfg.data = self.data.clone();
        }
        let strings = [
            ("seed", self.seed.map(|s| s.to_string())),
            ("alpha", self.alpha.clone()),
            ("methods", self.methods.clone()),
            ("k-range", self.k_range.clone()),
            ("grid-frac", self.grid_frac.map(|g| g.to_string())),
            ("workers", self.workers.map(|w| w.to_string())),
        ];
        for (key, value) in strings {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if self.myopic {
            cfg.myopic = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Model document written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Dataset file or directory to evaluate on.
    #[arg(long)]
    data: PathBuf,
    /// Directory for decisions.csv and metrics.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestKind {
    Wilcoxon,
    Nemenyi,
}

#[derive(Args)]
struct CompareArgs {
    /// Result CSVs or benchmark output directories. With several inputs,
    /// methods are prefixed by the input's name.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "wilcoxon")]
    test: TestKind,
    /// Reference method for the Wilcoxon table (default: first method).
    #[arg(long)]
    reference: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Result CSVs or benchmark output directories.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output file (UCR tab-separated, label first).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    series: usize,
    #[arg(long, default_value_t = 50)]
    length: usize,
    /// Fraction of the length before which classes are identical.
    #[arg(long, default_value_t = 0.5)]
    onset: f64,
    #[arg(long, default_value_t = 1.5)]
    shift: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.5)]
    positive_rate: f64,
}

fn results_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(RESULTS_FILE)
    } else {
        p.to_path_buf()
    }
}

fn load_rows(paths: &[PathBuf]) -> Result<Vec<bench::ResultRow>> {
    let mut labels: Vec<String> = paths
        .iter()
        .map(|p| {
            let p = if p.is_dir() { p.as_path() } else { p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(p) };
            p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
        })
        .collect();
    for i in 0..labels.len() {
        if labels[..i].contains(&labels[i]) || labels[i + 1..].contains(&labels[i]) {
            labels[i] = format!("{}#{}", labels[i], i + 1);
        }
    }
    let mut rows = Vec::new();
    for (path, label) in paths.iter().zip(&labels) {
        let file = results_path(path);
        let mut r = bench::read_results_csv(&file).with_context(|| format!("reading {}", file.display()))?;
        if paths.len() > 1 {
            for row in &mut r {
                row.method = format!("{label}:{}", row.method);
            }
        }
        rows.extend(r);
    }
    Ok(rows)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn csv_string<T: serde::Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn train(args: &RunArgs) -> Result<ExitCode> {
    let cfg = args.config()?;
    let sources = bench::discover(&cfg.data);
    let [source] = sources.as_slice() else {
        bail!("train needs exactly one dataset, found {}", sources.len());
    };
    let ([method], [alpha]) = (cfg.methods.as_slice(), cfg.alphas.as_slice()) else {
        bail!("train needs exactly one method and one alpha");
    };
    let method = match (*method, cfg.myopic) {
        (Method::Economy { variant, .. }, true) => Method::Economy {
            variant,
            horizon: Horizon::Myopic,
        },
        (m, _) => m,
    };
    let raw = bench::load_source(source)?;
    let (doc, report) = bench::train_model(&raw, method, *alpha, &cfg)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("model.json"));
    doc.save(&out)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn evaluate(args: &EvaluateArgs) -> Result<ExitCode> {
    let doc = EarlyClassifier::load(&args.model)?;
    let sources = bench::discover(std::slice::from_ref(&args.data));
    let [source] = sources.as_slice() else {
        bail!("evaluate needs exactly one dataset, found {}", sources.len());
    };
    let raw = bench::load_source(source)?;
    let (records, metrics) = bench::evaluate_model(&doc, &raw)?;
    let json = serde_json::to_string_pretty(&metrics)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("decisions.csv"), csv_string(&records)?)?;
        fs::write(dir.join("metrics.json"), &json)?;
    }
    println!("{json}");
    Ok(ExitCode::SUCCESS)
}

fn benchmark(args: &RunArgs) -> Result<ExitCode> {
    let cfg = args.config()?;
    let outcome = bench::run_benchmark(&cfg)?;
    for q in &outcome.summary.quarantined {
        eprintln!("quarantined {}: {}", q.dataset, q.error);
    }
    eprintln!(
        "{} dataset(s) ok, {} quarantined; results in {}",
        outcome.summary.datasets.len(),
        outcome.summary.quarantined.len(),
        cfg.out.display()
    );
    if outcome.summary.datasets.is_empty() {
        bail!("every dataset failed");
    }
    Ok(if outcome.is_partial() { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn compare(args: &CompareArgs) -> Result<ExitCode> {
    let rows = load_rows(&args.results)?;
    let json = match args.test {
        TestKind::Wilcoxon => {
            let reference = match &args.reference {
                Some(r) => r.clone(),
                None => report::methods(&rows).into_iter().next().context("no result rows")?,
            };
            serde_json::to_string_pretty(&report::wilcoxon_table(&rows, &reference)?)?
        }
        TestKind::Nemenyi => serde_json::to_string_pretty(&report::nemenyi_table(&rows)?)?,
    };
    emit(&(json + "\n"), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn pareto(args: &TableArgs) -> Result<ExitCode> {
    let rows = load_rows(&args.results)?;
    emit(&csv_string(&report::pareto_table(&rows))?, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn select_alpha(args: &TableArgs) -> Result<ExitCode> {
    let rows = load_rows(&args.results)?;
    emit(&csv_string(&report::select_alpha(&rows))?, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn synth(args: &SynthArgs) -> Result<ExitCode> {
    let spec = SynthSpec {
        series: args.series,
        length: args.length,
        onset: args.onset,
        shift: args.shift,
        noise: args.noise,
        positive_rate: args.positive_rate,
        seed: args.seed,
    };
    let data = synth::generate(&spec)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    dataset::write_ucr_tsv(&data, &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as a partial run
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Compare(a) => compare(a),
        Command::Pareto(a) => pareto(a),
        Command::SelectAlpha(a) => select_alpha(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

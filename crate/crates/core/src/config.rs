//! Benchmark configuration: defaults, a flat `key = value` file format and
//! per-key overrides, plus a stable hash stamped on every result row.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::LogisticConfig;
use crate::error::{Error, Result};
use crate::trigger::{Horizon, Variant};

/// A trigger strategy evaluated by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Economy { variant: Variant, horizon: Horizon },
    Sr,
}

impl Method {
    pub fn economy(variant: Variant) -> Self {
        Method::Economy {
            variant,
            horizon: Horizon::Full,
        }
    }

    pub fn myopic(variant: Variant) -> Self {
        Method::Economy {
            variant,
            horizon: Horizon::Myopic,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Method::Economy {
                variant,
                horizon: Horizon::Full,
            } => variant.name().to_string(),
            Method::Economy {
                variant,
                horizon: Horizon::Myopic,
            } => format!("{}-myopic", variant.name()),
            Method::Sr => "sr".to_string(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("sr") {
            return Ok(Method::Sr);
        }
        match s.strip_suffix("-myopic") {
            Some(base) => Ok(Method::myopic(base.parse()?)),
            None => Ok(Method::economy(s.parse()?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: Vec<PathBuf>,
    pub seed: u64,
    pub alphas: Vec<f64>,
    pub methods: Vec<Method>,
    /// Inclusive range of group counts tried during K selection.
    pub k_range: (usize, usize),
    pub grid_fraction: f64,
    pub classifier: LogisticConfig,
    pub out: PathBuf,
    /// Dataset-level worker threads; 0 uses every core.
    pub workers: usize,
    /// Also run the one-step-horizon counterpart of every Economy method.
    pub myopic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: Vec::new(),
            seed: 0,
            alphas: vec![0.001, 0.01, 0.1],
            methods: Variant::ALL
                .iter()
                .map(|&v| Method::economy(v))
                .chain([Method::Sr])
                .collect(),
            k_range: (1, 20),
            grid_fraction: 0.05,
            classifier: LogisticConfig::default(),
            out: PathBuf::from("results"),
            workers: 0,
            myopic: false,
        }
    }
}

fn parse_list<T: FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}"))))
        .collect()
}

fn parse_one<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

/// `"3"`, `"1..20"`, `"1-20"` or `"1..=20"`, all inclusive.
pub fn parse_k_range(value: &str) -> Result<(usize, usize)> {
    let v = value.trim();
    let (lo, hi) = if let Some((a, b)) = v.split_once("..=") {
        (a, b)
    } else if let Some((a, b)) = v.split_once("..") {
        (a, b)
    } else if let Some((a, b)) = v.split_once('-') {
        (a, b)
    } else {
        (v, v)
    };
    let lo: usize = parse_one(lo, "k-range")?;
    let hi: usize = parse_one(hi, "k-range")?;
    if lo == 0 || hi < lo {
        return Err(Error::Config(format!("k-range {value:?} must satisfy 1 <= lo <= hi")));
    }
    Ok((lo, hi))
}

impl RunConfig {
    /// Sets one key. Keys match the command-line flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "data" => self.data = parse_list::<String>(value, key)?.into_iter().map(PathBuf::from).collect(),
            "seed" => self.seed = parse_one(value, key)?,
            "alpha" | "alphas" => self.alphas = parse_list(value, key)?,
            "methods" => self.methods = parse_list(value, key)?,
            "k-range" => self.k_range = parse_k_range(value)?,
            "grid-frac" => self.grid_fraction = parse_one(value, key)?,
            "out" => self.out = PathBuf::from(value.trim()),
            "workers" => self.workers = parse_one(value, key)?,
            "myopic" => self.myopic = parse_one(value, key)?,
            "iterations" => self.classifier.iterations = parse_one(value, key)?,
            "learning-rate" => self.classifier.learning_rate = parse_one(value, key)?,
            "l2" => self.classifier.l2 = parse_one(value, key)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config("alpha values must be finite and non-negative".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if !(self.grid_fraction > 0.0 && self.grid_fraction <= 1.0) {
            return Err(Error::Config("grid-frac must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Methods to run: the configured ones, followed by myopic counterparts
    /// when `myopic` is set. Duplicates are dropped.
    pub fn effective_methods(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::new();
        let extra = self.methods.iter().filter_map(|m| match m {
            Method::Economy { variant, .. } if self.myopic => Some(Method::myopic(*variant)),
            _ => None,
        });
        for m in self.methods.iter().copied().chain(extra) {
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out
    }

    /// Short SHA-256 of every setting that can change results (output
    /// location and worker count excluded).
    pub fn hash(&self) -> String {
        let canonical = format!(
            "data={}\nseed={}\nalpha={}\nmethods={}\nk-range={}..{}\ngrid-frac={}\niterations={}\nlearning-rate={}\nl2={}\nmyopic={}\n",
            self.data.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(","),
            self.seed,
            self.alphas.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(","),
            self.methods.iter().map(Method::name).collect::<Vec<_>>().join(","),
            self.k_range.0,
            self.k_range.1,
            self.grid_fraction,
            self.classifier.iterations,
            self.classifier.learning_rate,
            self.classifier.l2,
            self.myopic,
        );
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        let mut all: Vec<Method> = Variant::ALL.iter().map(|&v| Method::economy(v)).collect();
        all.extend(Variant::ALL.iter().map(|&v| Method::myopic(v)));
        all.push(Method::Sr);
        for m in all {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("gamma-myopic".parse::<Method>().unwrap(), Method::myopic(Variant::Gamma));
    }

    #[test]
    fn file_then_override() {
        let mut c = RunConfig::default();
        c.apply_text("# sweep\nseed = 7\nalpha = 0.1, 0.5\nmethods = economy-gamma, sr\nk-range = 2..5\n")
            .unwrap();
        c.set("seed", "9").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.alphas, vec![0.1, 0.5]);
        assert_eq!(c.methods, vec![Method::economy(Variant::Gamma), Method::Sr]);
        assert_eq!(c.k_range, (2, 5));
        assert!(c.apply_text("bogus = 1").is_err());
        assert!(c.apply_text("seed 1").is_err());
    }

    #[test]
    fn k_range_forms() {
        assert_eq!(parse_k_range("4").unwrap(), (4, 4));
        assert_eq!(parse_k_range("1-20").unwrap(), (1, 20));
        assert_eq!(parse_k_range("1..=3").unwrap(), (1, 3));
        assert!(parse_k_range("0..3").is_err());
        assert!(parse_k_range("5..3").is_err());
    }

    #[test]
    fn hash_ignores_output_and_workers() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        b.workers = 3;
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn myopic_adds_counterparts() {
        let mut c = RunConfig {
            methods: vec![Method::economy(Variant::Gamma), Method::Sr],
            ..RunConfig::default()
        };
        c.myopic = true;
        assert_eq!(
            c.effective_methods(),
            vec![Method::economy(Variant::Gamma), Method::Sr, Method::myopic(Variant::Gamma)]
        );
    }
}

//! Labeled fixed-length series, the UCR text loader, label binarization,
//! the stratified train/meta/tuning/test split and the truncation grid.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class identifier as it appears in the source file.
pub type ClassId = i64;

/// One fully observed series and its class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub values: Vec<f64>,
    pub label: ClassId,
}

impl LabeledSeries {
    pub fn new(values: Vec<f64>, label: ClassId) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "series length {} is below 2",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values, label })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The first `t` measurements.
    pub fn truncate(&self, t: usize) -> Result<&[f64]> {
        truncate(&self.values, t)
    }
}

/// Returns `values[..t]`, rejecting `t` outside `[1, len]`.
pub fn truncate(values: &[f64], t: usize) -> Result<&[f64]> {
    if t == 0 || t > values.len() {
        return Err(Error::TimestampOutOfRange {
            t,
            length: values.len(),
        });
    }
    Ok(&values[..t])
}

/// A set of series sharing one length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    series: Vec<LabeledSeries>,
    length: usize,
}

impl Dataset {
    pub fn new(series: Vec<LabeledSeries>) -> Result<Self> {
        let first = series.first().ok_or(Error::EmptyDataset)?;
        let length = first.len();
        if let Some(bad) = series.iter().position(|s| s.len() != length) {
            return Err(Error::InvalidDataset(format!(
                "series {bad} has length {} but the dataset length is {length}",
                series[bad].len()
            )));
        }
        Ok(Self { series, length })
    }

    pub fn series(&self) -> &[LabeledSeries] {
        &self.series
    }

    /// Series length `T`.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.series.iter().map(|s| s.label)
    }

    /// Number of series per class, ordered by class id.
    pub fn class_counts(&self) -> BTreeMap<ClassId, usize> {
        let mut counts = BTreeMap::new();
        for label in self.labels() {
            *counts.entry(label).or_insert(0) += 1;
        }
        counts
    }

    /// True when the label set is exactly `{0, 1}`.
    pub fn is_binary(&self) -> bool {
        let counts = self.class_counts();
        counts.len() == 2 && counts.contains_key(&0) && counts.contains_key(&1)
    }

    pub(crate) fn require_binary(&self) -> Result<()> {
        if self.is_binary() {
            Ok(())
        } else {
            Err(Error::InvalidDataset(format!(
                "expected labels {{0, 1}}, found {:?}",
                self.class_counts().keys().collect::<Vec<_>>()
            )))
        }
    }

    /// Subset by index, preserving the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(indices.iter().map(|&i| self.series[i].clone()).collect())
    }

    /// Appends the series of `other`; lengths must agree.
    pub fn concat(mut self, other: Dataset) -> Result<Dataset> {
        if other.length != self.length {
            return Err(Error::InvalidDataset(format!(
                "cannot concatenate datasets of lengths {} and {}",
                self.length, other.length
            )));
        }
        self.series.extend(other.series);
        Ok(self)
    }
}

/// Reads a UCR-style file: one series per line, label first, fields separated
/// by tabs or spaces. Blank lines are skipped.
pub fn load_ucr_tsv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_ucr(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses UCR-style text from any reader.
pub fn parse_ucr(reader: impl BufRead) -> Result<Dataset> {
    let mut series = Vec::new();
    let mut expected: Option<usize> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        let mut tokens = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|tok| !tok.is_empty());
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label = parse_label(label_tok, line_no)?;
        let values = tokens
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::BadToken {
                    line: line_no,
                    token: tok.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match expected {
            None => expected = Some(values.len()),
            Some(n) if n != values.len() => {
                return Err(Error::RaggedLine {
                    line: line_no,
                    expected: n,
                    found: values.len(),
                })
            }
            Some(_) => {}
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadLine {
                line: line_no,
                reason: "non-finite value".into(),
            });
        }
        let series_entry = LabeledSeries::new(values, label).map_err(|e| Error::BadLine {
            line: line_no,
            reason: e.to_string(),
        })?;
        series.push(series_entry);
    }
    Dataset::new(series)
}

fn parse_label(token: &str, line: usize) -> Result<ClassId> {
    if let Ok(v) = token.parse::<ClassId>() {
        return Ok(v);
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 => Ok(v as ClassId),
        _ => Err(Error::BadToken {
            line,
            token: token.to_string(),
        }),
    }
}

/// Writes a dataset in the format read by [`load_ucr_tsv`]. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_ucr_tsv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for s in dataset.series() {
        write!(out, "{}", s.label).expect("write to vec");
        for v in &s.values {
            write!(out, "\t{v}").expect("write to vec");
        }
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Most frequent class; ties go to the smallest class id.
pub fn majority_class(dataset: &Dataset) -> Result<ClassId> {
    let counts = dataset.class_counts();
    if counts.len() < 2 {
        return Err(Error::SingleClass);
    }
    // BTreeMap iterates in ascending id order, so `>` keeps the smallest id on ties.
    let mut majority = None;
    let mut best = 0;
    for (&id, &n) in &counts {
        if n > best {
            best = n;
            majority = Some(id);
        }
    }
    Ok(majority.expect("non-empty counts"))
}

/// `positive` becomes 1, every other class 0.
pub fn binarize_against(dataset: &Dataset, positive: ClassId) -> Result<Dataset> {
    let series = dataset
        .series()
        .iter()
        .map(|s| LabeledSeries {
            values: s.values.clone(),
            label: ClassId::from(s.label == positive),
        })
        .collect();
    Dataset::new(series)
}

/// Majority class becomes 1, every other class 0.
pub fn binarize_majority(dataset: &Dataset) -> Result<Dataset> {
    binarize_against(dataset, majority_class(dataset)?)
}

/// The four disjoint subsets used by the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitBundle {
    /// Subset a: trains the classifier chain.
    pub classifier_train: Dataset,
    /// Subset b: estimates partitions, priors, confusion and transition tables.
    pub meta_train: Dataset,
    /// Subset c: selects the number of groups.
    pub k_tuning: Dataset,
    pub test: Dataset,
    pub seed: u64,
    /// Original indices of each subset, in the order above.
    pub indices: [Vec<usize>; 4],
}

/// Percent of the full dataset assigned to subsets a, b and c
/// (70% train split 40/40/20). The test set takes the remainder.
const SPLIT_PERCENT: [usize; 3] = [28, 28, 14];

/// Stratified, seeded split into subsets a/b/c and test.
///
/// Subset sizes are `floor(n * p / 100)` for the percentages above; the test
/// set receives the remainder. Within each subset, class counts follow the
/// largest-remainder apportionment of the subset size, and every subset is
/// forced to contain at least one series of each class.
pub fn make_splits(dataset: &Dataset, seed: u64) -> Result<SplitBundle> {
    let n = dataset.len();
    if n < 10 {
        return Err(Error::TooSmall(format!("{n} series, need at least 10")));
    }
    let counts = dataset.class_counts();
    if counts.len() < 2 {
        return Err(Error::SingleClass);
    }
    let classes: Vec<ClassId> = counts.keys().copied().collect();
    let class_sizes: Vec<usize> = counts.values().copied().collect();
    if let Some((id, &c)) = classes.iter().zip(&class_sizes).find(|(_, &c)| c < 4) {
        return Err(Error::TooSmall(format!(
            "class {id} has {c} series, need at least 4 (one per subset)"
        )));
    }

    // alloc[s][c]: series of class c placed in subset s (a, b, c).
    let mut alloc = Vec::with_capacity(3);
    for pct in SPLIT_PERCENT {
        let size = n * pct / 100;
        let mut per_class = apportion(size, &class_sizes, n);
        for c in 0..per_class.len() {
            if per_class[c] == 0 {
                let donor = (0..per_class.len())
                    .max_by_key(|&d| (per_class[d], std::cmp::Reverse(d)))
                    .expect("classes");
                if per_class[donor] <= 1 {
                    return Err(Error::TooSmall(format!(
                        "subset of size {size} cannot hold every class"
                    )));
                }
                per_class[donor] -= 1;
                per_class[c] = 1;
            }
        }
        alloc.push(per_class);
    }
    for (c, &size) in class_sizes.iter().enumerate() {
        let used: usize = alloc.iter().map(|a| a[c]).sum();
        if used >= size {
            return Err(Error::TooSmall(format!(
                "class {} leaves no series for the test set",
                classes[c]
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subsets: [Vec<usize>; 4] = Default::default();
    for (c, &class) in classes.iter().enumerate() {
        let mut members: Vec<usize> = dataset
            .series()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);
        let mut rest = members.as_slice();
        for (s, subset) in subsets.iter_mut().take(3).enumerate() {
            let (head, tail) = rest.split_at(alloc[s][c]);
            subset.extend_from_slice(head);
            rest = tail;
        }
        subsets[3].extend_from_slice(rest);
    }
    for subset in subsets.iter_mut() {
        subset.sort_unstable();
    }

    Ok(SplitBundle {
        classifier_train: dataset.select(&subsets[0])?,
        meta_train: dataset.select(&subsets[1])?,
        k_tuning: dataset.select(&subsets[2])?,
        test: dataset.select(&subsets[3])?,
        seed,
        indices: subsets,
    })
}

/// Largest-remainder apportionment of `size` seats proportionally to `weights`
/// (which sum to `total`). Ties go to the lower index.
fn apportion(size: usize, weights: &[usize], total: usize) -> Vec<usize> {
    let mut seats: Vec<usize> = weights.iter().map(|&w| size * w / total).collect();
    let mut remainders: Vec<(usize, usize)> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| ((size * w) % total, i))
        .collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let assigned: usize = seats.iter().sum();
    for &(_, i) in remainders.iter().take(size - assigned) {
        seats[i] += 1;
    }
    seats
}

/// Strictly increasing truncation timestamps in `[1, T]`, always ending at `T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimestampGrid {
    times: Vec<usize>,
    length: usize,
}

impl TimestampGrid {
    pub fn new(times: Vec<usize>, length: usize) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidParameter("empty timestamp grid".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "grid timestamps must be strictly increasing".into(),
            ));
        }
        if times[0] == 0 || *times.last().unwrap() != length {
            return Err(Error::InvalidParameter(format!(
                "grid must lie in [1, {length}] and end at {length}"
            )));
        }
        Ok(Self { times, length })
    }

    /// `round(j * T / n)` for `j = 1..=n` with `n = round(1 / fraction)`,
    /// deduplicated and clamped to `[1, T]`.
    pub fn fractional(length: usize, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grid fraction {fraction} outside (0, 1]"
            )));
        }
        if length == 0 {
            return Err(Error::InvalidParameter("series length is zero".into()));
        }
        let n = (1.0 / fraction).round().max(1.0) as usize;
        let mut times: Vec<usize> = (1..=n)
            .map(|j| ((2 * j * length + n) / (2 * n)).clamp(1, length))
            .collect();
        times.dedup();
        Self::new(times, length)
    }

    /// Every 5% of the length.
    pub fn default_for(length: usize) -> Result<Self> {
        Self::fractional(length, 0.05)
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn time(&self, step: usize) -> usize {
        self.times[step]
    }

    pub fn last_step(&self) -> usize {
        self.times.len() - 1
    }

    pub fn step_of(&self, t: usize) -> Option<usize> {
        self.times.binary_search(&t).ok()
    }
}

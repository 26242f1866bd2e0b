//! One probabilistic binary classifier per grid timestamp, plus the smoothed
//! confusion-matrix and class-prior estimators built on top of them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset, LabeledSeries, TimestampGrid};
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureVector, FEATURE_COUNT};

/// Additive smoothing applied to every count table.
pub const SMOOTHING: f64 = 1.0;

/// Scores at or above this are predicted as class 1.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Thresholded prediction for a class-1 probability.
pub fn predict(score: f64) -> ClassId {
    ClassId::from(score >= DECISION_THRESHOLD)
}

/// Anything that can score a prefix at each step of a grid.
///
/// The triggers only ever see classifiers through this trait, so any
/// calibrated binary scorer can stand in for the built-in logistic chain.
pub trait ScoreChain: Sync {
    fn grid(&self) -> &TimestampGrid;

    /// Probability of class 1 for a prefix of length `grid().time(step)`.
    fn score_at(&self, step: usize, prefix: &[f64]) -> Result<f64>;

    /// Scores of every grid prefix of a complete series.
    fn score_series(&self, values: &[f64]) -> Result<Vec<f64>> {
        let grid = self.grid();
        if values.len() != grid.length() {
            return Err(Error::LengthMismatch {
                expected: grid.length(),
                found: values.len(),
            });
        }
        (0..grid.len())
            .map(|step| self.score_at(step, &values[..grid.time(step)]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// L2 penalty on the weights (the bias is not penalized).
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            learning_rate: 0.3,
            l2: 1e-3,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// L2-regularized logistic regression over z-scored prefix features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Prefix length this model expects.
    pub timestamp: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
}

impl LogisticModel {
    /// A model over raw (unstandardized) features.
    pub fn from_parts(timestamp: usize, weights: Vec<f64>, bias: f64) -> Self {
        let dim = weights.len();
        Self {
            timestamp,
            weights,
            bias,
            feature_mean: vec![0.0; dim],
            feature_scale: vec![1.0; dim],
        }
    }

    /// Full-batch gradient descent from a zero start; deterministic.
    pub fn fit(
        timestamp: usize,
        features: &[FeatureVector],
        labels: &[ClassId],
        config: &LogisticConfig,
    ) -> Result<Self> {
        if features.len() != labels.len() || features.is_empty() {
            return Err(Error::InvalidParameter(
                "features and labels must be non-empty and aligned".into(),
            ));
        }
        if !labels.contains(&0) || !labels.contains(&1) {
            return Err(Error::SingleClass);
        }
        let n = features.len() as f64;
        let mut mean = vec![0.0; FEATURE_COUNT];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v / n;
            }
        }
        let mut scale = vec![0.0; FEATURE_COUNT];
        for f in features {
            for ((s, v), m) in scale.iter_mut().zip(f).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        for s in scale.iter_mut() {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        let z: Vec<FeatureVector> = features
            .iter()
            .map(|f| {
                let mut out = [0.0; FEATURE_COUNT];
                for i in 0..FEATURE_COUNT {
                    out[i] = (f[i] - mean[i]) / scale[i];
                }
                out
            })
            .collect();
        let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();

        let mut w = [0.0; FEATURE_COUNT];
        let mut b = 0.0;
        for _ in 0..config.iterations {
            let mut grad_w = [0.0; FEATURE_COUNT];
            let mut grad_b = 0.0;
            for (row, &target) in z.iter().zip(&y) {
                let act = b + row.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>();
                let err = sigmoid(act) - target;
                grad_b += err;
                for (g, x) in grad_w.iter_mut().zip(row) {
                    *g += err * x;
                }
            }
            for (wi, g) in w.iter_mut().zip(&grad_w) {
                *wi -= config.learning_rate * (g / n + config.l2 * *wi);
            }
            b -= config.learning_rate * grad_b / n;
        }

        Ok(Self {
            timestamp,
            weights: w.to_vec(),
            bias: b,
            feature_mean: mean,
            feature_scale: scale,
        })
    }

    pub fn pre_activation(&self, features: &[f64]) -> f64 {
        self.bias
            + features
                .iter()
                .zip(&self.weights)
                .zip(self.feature_mean.iter().zip(&self.feature_scale))
                .map(|((x, w), (m, s))| w * (x - m) / s)
                .sum::<f64>()
    }

    pub fn score_features(&self, features: &[f64]) -> f64 {
        sigmoid(self.pre_activation(features))
    }

    /// Probability of class 1 for a prefix of exactly `timestamp` values.
    pub fn score(&self, prefix: &[f64]) -> Result<f64> {
        if prefix.len() != self.timestamp {
            return Err(Error::LengthMismatch {
                expected: self.timestamp,
                found: prefix.len(),
            });
        }
        Ok(self.score_features(&extract_features(prefix)?))
    }
}

/// Logistic models for every grid timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierChain {
    grid: TimestampGrid,
    models: Vec<LogisticModel>,
}

impl ClassifierChain {
    /// Trains one model per grid timestamp on truncated copies of `train`.
    pub fn train(train: &Dataset, grid: &TimestampGrid, config: &LogisticConfig) -> Result<Self> {
        train.require_binary()?;
        if train.length() != grid.length() {
            return Err(Error::LengthMismatch {
                expected: grid.length(),
                found: train.length(),
            });
        }
        let labels: Vec<ClassId> = train.labels().collect();
        let models = grid
            .times()
            .par_iter()
            .map(|&t| {
                let features = train
                    .series()
                    .iter()
                    .map(|s| extract_features(&s.values[..t]))
                    .collect::<Result<Vec<_>>>()?;
                LogisticModel::fit(t, &features, &labels, config)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: grid.clone(),
            models,
        })
    }

    pub fn from_models(grid: TimestampGrid, models: Vec<LogisticModel>) -> Result<Self> {
        if models.len() != grid.len()
            || models.iter().zip(grid.times()).any(|(m, &t)| m.timestamp != t)
        {
            return Err(Error::MalformedModel(
                "chain does not cover the grid".into(),
            ));
        }
        Ok(Self { grid, models })
    }

    pub fn models(&self) -> &[LogisticModel] {
        &self.models
    }

    pub fn model(&self, step: usize) -> &LogisticModel {
        &self.models[step]
    }
}

impl ScoreChain for ClassifierChain {
    fn grid(&self) -> &TimestampGrid {
        &self.grid
    }

    fn score_at(&self, step: usize, prefix: &[f64]) -> Result<f64> {
        self.models
            .get(step)
            .ok_or_else(|| Error::InvalidParameter(format!("step {step} outside the grid")))?
            .score(prefix)
    }
}

/// `P(ŷ | y)` estimated with additive smoothing. Rows are indexed by the true
/// class, columns by the predicted class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub probs: [[f64; 2]; 2],
    pub counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 2]; 2]) -> Self {
        let mut probs = [[0.0; 2]; 2];
        for y in 0..2 {
            let row_total = (counts[y][0] + counts[y][1]) as f64 + 2.0 * SMOOTHING;
            for yhat in 0..2 {
                probs[y][yhat] = (counts[y][yhat] as f64 + SMOOTHING) / row_total;
            }
        }
        Self { probs, counts }
    }

    /// Builds the matrix from `(truth, prediction)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (ClassId, ClassId)>) -> Self {
        let mut counts = [[0u64; 2]; 2];
        for (y, yhat) in pairs {
            counts[class_index(y)][class_index(yhat)] += 1;
        }
        Self::from_counts(counts)
    }

    /// `P(ŷ = yhat | y)`.
    pub fn prob(&self, yhat: usize, y: usize) -> f64 {
        self.probs[y][yhat]
    }
}

/// Smoothed `P(y)` within a group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassPrior(pub [f64; 2]);

impl ClassPrior {
    pub fn from_counts(counts: [u64; 2]) -> Self {
        let total = (counts[0] + counts[1]) as f64 + 2.0 * SMOOTHING;
        ClassPrior([
            (counts[0] as f64 + SMOOTHING) / total,
            (counts[1] as f64 + SMOOTHING) / total,
        ])
    }

    pub fn from_labels(labels: impl IntoIterator<Item = ClassId>) -> Self {
        let mut counts = [0u64; 2];
        for y in labels {
            counts[class_index(y)] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn prob(&self, y: usize) -> f64 {
        self.0[y]
    }
}

pub(crate) fn class_index(label: ClassId) -> usize {
    debug_assert!(label == 0 || label == 1, "label {label} is not binary");
    usize::from(label != 0)
}

/// Confusion of `model` over the members of `eval` accepted by `filter`.
pub fn estimate_confusion(
    model: &LogisticModel,
    eval: &Dataset,
    filter: impl Fn(usize, &LabeledSeries) -> bool,
) -> Result<ConfusionMatrix> {
    let mut pairs = Vec::new();
    for (i, s) in eval.series().iter().enumerate() {
        if filter(i, s) {
            let score = model.score(s.truncate(model.timestamp)?)?;
            pairs.push((s.label, predict(score)));
        }
    }
    Ok(ConfusionMatrix::from_pairs(pairs))
}

/// Class prior over the members of `eval` accepted by `filter`.
pub fn estimate_priors(
    eval: &Dataset,
    filter: impl Fn(usize, &LabeledSeries) -> bool,
) -> ClassPrior {
    ClassPrior::from_labels(
        eval.series()
            .iter()
            .enumerate()
            .filter(|(i, s)| filter(*i, s))
            .map(|(_, s)| s.label),
    )
}

/// A dataset together with every grid score of every series.
#[derive(Debug, Clone)]
pub struct ScoredSet {
    pub dataset: Dataset,
    /// `scores[i][step]` for series `i`.
    pub scores: Vec<Vec<f64>>,
}

impl ScoredSet {
    pub fn new(dataset: Dataset, chain: &dyn ScoreChain) -> Result<Self> {
        dataset.require_binary_labels()?;
        let scores = dataset
            .series()
            .par_iter()
            .map(|s| chain.score_series(&s.values))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dataset, scores })
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    pub fn label(&self, i: usize) -> ClassId {
        self.dataset.series()[i].label
    }

    pub fn values(&self, i: usize) -> &[f64] {
        &self.dataset.series()[i].values
    }

    /// Concatenation of two scored sets.
    pub fn union(&self, other: &ScoredSet) -> Result<ScoredSet> {
        let dataset = self.dataset.clone().concat(other.dataset.clone())?;
        let mut scores = self.scores.clone();
        scores.extend(other.scores.iter().cloned());
        Ok(ScoredSet { dataset, scores })
    }
}

impl Dataset {
    /// Labels must be 0 or 1; unlike the split invariant, one class may be absent.
    pub(crate) fn require_binary_labels(&self) -> Result<()> {
        match self.labels().find(|&l| l != 0 && l != 1) {
            Some(l) => Err(Error::InvalidDataset(format!(
                "label {l} is not binary; binarize the dataset first"
            ))),
            None => Ok(()),
        }
    }
}

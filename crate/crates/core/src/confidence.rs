//! Equal-frequency discretization of classifier confidence, Markov transition
//! matrices between consecutive steps, and distributions over intervals.

use serde::{Deserialize, Serialize};

use crate::classifier::SMOOTHING;
use crate::error::{Error, Result};

const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Intervals `[b_0, b_1[, …, [b_{K-1}, b_K]` over `[0, 1]` with `b_0 = 0`,
/// `b_K = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalPartition {
    boundaries: Vec<f64>,
}

impl IntervalPartition {
    /// Equal-frequency intervals over `scores`.
    ///
    /// Boundary `j` sits midway between the order statistics ranked
    /// `ceil(j·n/K) - 1` and `ceil(j·n/K)`. A boundary that would fall between
    /// tied scores separates nothing and is dropped, so heavily tied scores
    /// yield fewer than `k` intervals.
    pub fn fit(scores: &[f64], k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if scores.len() < k {
            return Err(Error::NotEnoughPoints {
                need: k,
                got: scores.len(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut sorted: Vec<f64> = scores.iter().map(|s| s.clamp(0.0, 1.0)).collect();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut boundaries = vec![0.0];
        for j in 1..k {
            let rank = (j * n).div_ceil(k);
            if rank == 0 || rank >= n {
                continue;
            }
            let (lo, hi) = (sorted[rank - 1], sorted[rank]);
            if lo < hi {
                let b = 0.5 * (lo + hi);
                if b > *boundaries.last().unwrap() {
                    boundaries.push(b);
                }
            }
        }
        boundaries.push(1.0);
        Ok(Self { boundaries })
    }

    pub fn from_boundaries(boundaries: Vec<f64>) -> Result<Self> {
        let ok = boundaries.len() >= 2
            && boundaries[0] == 0.0
            && *boundaries.last().unwrap() == 1.0
            && boundaries.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "boundaries {boundaries:?} must increase strictly from 0 to 1"
            )));
        }
        Ok(Self { boundaries })
    }

    /// The whole of `[0, 1]` as one interval.
    pub fn single() -> Self {
        Self {
            boundaries: vec![0.0, 1.0],
        }
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Number of intervals.
    pub fn k(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Index of the interval containing `score` (clamped to `[0, 1]`).
    pub fn locate(&self, score: f64) -> usize {
        let interior = &self.boundaries[1..self.boundaries.len() - 1];
        interior.partition_point(|&b| b <= score)
    }
}

/// Distribution over the confidence intervals of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaVector(Vec<f64>);

impl GammaVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty()
            || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || (sum - 1.0).abs() > SIMPLEX_TOLERANCE
        {
            return Err(Error::InvalidParameter(format!(
                "{probs:?} is not a probability vector"
            )));
        }
        Ok(Self(probs))
    }

    /// All mass on interval `index`.
    pub fn one_hot(k: usize, index: usize) -> Self {
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        Self(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }
}

/// Row-stochastic matrix of interval-to-interval moves between two
/// consecutive steps. Rows index the earlier step's intervals; the matrix is
/// rectangular when the steps have different interval counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    counts: Vec<Vec<u64>>,
}

impl TransitionMatrix {
    /// `(n_ij + ε) / (n_i + ε·cols)`.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let cols = counts.first().map_or(0, Vec::len);
        if cols == 0 || counts.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged or empty count matrix".into()));
        }
        let rows = counts
            .iter()
            .map(|row| {
                let total = row.iter().sum::<u64>() as f64 + SMOOTHING * cols as f64;
                row.iter().map(|&c| (c as f64 + SMOOTHING) / total).collect()
            })
            .collect();
        Ok(Self { rows, counts })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged or empty matrix".into()));
        }
        for row in &rows {
            GammaVector::new(row.clone())?;
        }
        Ok(Self {
            rows,
            counts: Vec::new(),
        })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            rows: (0..k).map(|i| GammaVector::one_hot(k, i).0).collect(),
            counts: Vec::new(),
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.rows[0].len())
    }

    /// `γᵀ M`.
    pub fn left_multiply(&self, gamma: &GammaVector) -> Result<GammaVector> {
        let (r, c) = self.shape();
        if gamma.len() != r {
            return Err(Error::MalformedModel(format!(
                "distribution of length {} cannot pass through a {r}x{c} matrix",
                gamma.len()
            )));
        }
        let mut out = vec![0.0; c];
        for (g, row) in gamma.iter().zip(&self.rows) {
            if *g == 0.0 {
                continue;
            }
            for (o, m) in out.iter_mut().zip(row) {
                *o += g * m;
            }
        }
        Ok(GammaVector(out))
    }
}

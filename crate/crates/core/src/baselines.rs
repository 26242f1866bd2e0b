//! The SR stopping rule: a linear trigger over the classifier's current
//! confidence and elapsed time, with parameters picked by exhaustive grid
//! search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{predict, ScoredSet};
use crate::cost::CostModel;
use crate::dataset::{ClassId, TimestampGrid};
use crate::error::{Error, Result};

/// Points per axis of the search grid: `-1, -0.95, …, 1`.
pub const SR_GRID_POINTS: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

impl SrParams {
    pub fn new(gamma1: f64, gamma2: f64, gamma3: f64) -> Self {
        Self { gamma1, gamma2, gamma3 }
    }

    /// Parameters at grid indices `(i, j, l)`, each in `0..41`.
    pub fn from_grid(i: usize, j: usize, l: usize) -> Self {
        Self::new(grid_value(i), grid_value(j), grid_value(l))
    }
}

/// Value of grid index `i`: `(i - 20) / 20`.
pub fn grid_value(i: usize) -> f64 {
    (i as f64 - 20.0) / 20.0
}

/// Largest posterior and posterior margin of a binary score.
pub fn confidence_terms(score: f64) -> (f64, f64) {
    (score.max(1.0 - score), (2.0 * score - 1.0).abs())
}

/// `true` (stop) when `γ1·p1 + γ2·p2 + γ3·t/T > 0`; zero means wait.
pub fn sr_trigger(params: &SrParams, p1: f64, p2: f64, t: usize, length: usize) -> bool {
    params.gamma1 * p1 + params.gamma2 * p2 + params.gamma3 * t as f64 / length as f64 > 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrDecision {
    pub step: usize,
    pub time: usize,
    pub prediction: ClassId,
    pub score: f64,
}

/// Runs the rule over one series' grid scores, forcing a decision at the
/// last step.
pub fn sr_decide(params: &SrParams, scores: &[f64], grid: &TimestampGrid) -> Result<SrDecision> {
    if scores.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: scores.len(),
        });
    }
    let last = grid.last_step();
    let step = (0..=last)
        .find(|&s| {
            let (p1, p2) = confidence_terms(scores[s]);
            s == last || sr_trigger(params, p1, p2, grid.time(s), grid.length())
        })
        .unwrap_or(last);
    Ok(SrDecision {
        step,
        time: grid.time(step),
        prediction: predict(scores[step]),
        score: scores[step],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrTuning {
    pub params: SrParams,
    /// AvgCost of `params` on the tuning set.
    pub avg_cost: f64,
}

/// Picks the grid point with the lowest AvgCost on `tuning`. Equal costs go
/// to the lexicographically smallest `(γ1, γ2, γ3)`.
pub fn sr_tune(tuning: &ScoredSet, grid: &TimestampGrid, cost: &CostModel) -> Result<SrTuning> {
    if tuning.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if tuning.scores.iter().any(|row| row.len() != grid.len()) {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            found: tuning.scores[0].len(),
        });
    }
    struct Row {
        terms: Vec<(f64, f64, f64)>,
        costs: Vec<f64>,
    }
    let rows: Vec<Row> = (0..tuning.len())
        .map(|i| {
            let scores = &tuning.scores[i];
            let terms = (0..grid.len())
                .map(|s| {
                    let (p1, p2) = confidence_terms(scores[s]);
                    (p1, p2, grid.time(s) as f64 / grid.length() as f64)
                })
                .collect();
            let costs = (0..grid.len())
                .map(|s| cost.incurred(predict(scores[s]), tuning.label(i), grid.time(s)))
                .collect();
            Row { terms, costs }
        })
        .collect();
    let last = grid.last_step();
    let n = SR_GRID_POINTS;
    let total_cost = |p: SrParams| -> f64 {
        rows.iter()
            .map(|row| {
                let step = row
                    .terms
                    .iter()
                    .position(|&(p1, p2, frac)| p.gamma1 * p1 + p.gamma2 * p2 + p.gamma3 * frac > 0.0)
                    .unwrap_or(last);
                row.costs[step]
            })
            .sum()
    };
    let (best_index, best_total) = (0..n * n * n)
        .into_par_iter()
        .map(|index| {
            let p = SrParams::from_grid(index / (n * n), (index / n) % n, index % n);
            (index, total_cost(p))
        })
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    Ok(SrTuning {
        params: SrParams::from_grid(best_index / (n * n), (best_index / n) % n, best_index % n),
        avg_cost: best_total / tuning.len() as f64,
    })
}

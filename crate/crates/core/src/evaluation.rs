//! Per-series run records and the summary metrics computed from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{sr_decide, SrParams};
use crate::classifier::{class_index, predict, ScoredSet};
use crate::cost::CostModel;
use crate::dataset::{ClassId, TimestampGrid};
use crate::error::{Error, Result};
use crate::trigger::TriggerModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Index of the series in its evaluation set.
    pub series: usize,
    pub step: usize,
    /// Trigger timestamp.
    pub time: usize,
    pub prediction: ClassId,
    pub label: ClassId,
    pub misclassification: f64,
    pub delay: f64,
}

impl RunRecord {
    pub fn new(series: usize, step: usize, time: usize, prediction: ClassId, label: ClassId, cost: &CostModel) -> Self {
        Self {
            series,
            step,
            time,
            prediction,
            label,
            misclassification: cost.misclassification(prediction, label),
            delay: cost.delay(time),
        }
    }

    pub fn cost(&self) -> f64 {
        self.misclassification + self.delay
    }
}

fn non_empty(records: &[RunRecord]) -> Result<()> {
    if records.is_empty() {
        Err(Error::InvalidParameter("no run records".into()))
    } else {
        Ok(())
    }
}

pub fn avg_cost(records: &[RunRecord]) -> Result<f64> {
    non_empty(records)?;
    Ok(records.iter().map(RunRecord::cost).sum::<f64>() / records.len() as f64)
}

pub fn mean_misclassification(records: &[RunRecord]) -> Result<f64> {
    non_empty(records)?;
    Ok(records.iter().map(|r| r.misclassification).sum::<f64>() / records.len() as f64)
}

pub fn mean_delay(records: &[RunRecord]) -> Result<f64> {
    non_empty(records)?;
    Ok(records.iter().map(|r| r.delay).sum::<f64>() / records.len() as f64)
}

/// Median of `values`; the mean of the middle pair for even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("median of nothing".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Median trigger time over `length`.
pub fn earliness(records: &[RunRecord], length: usize) -> Result<f64> {
    non_empty(records)?;
    let times: Vec<f64> = records.iter().map(|r| r.time as f64).collect();
    Ok(median(&times)? / length as f64)
}

/// Cohen's kappa of predictions against labels; 0 when chance agreement is 1.
pub fn kappa(records: &[RunRecord]) -> Result<f64> {
    non_empty(records)?;
    let mut counts = [[0usize; 2]; 2];
    for r in records {
        counts[class_index(r.label)][class_index(r.prediction)] += 1;
    }
    let n = records.len() as f64;
    let observed = (counts[0][0] + counts[1][1]) as f64 / n;
    let expected = (0..2)
        .map(|c| {
            let truth = (counts[c][0] + counts[c][1]) as f64 / n;
            let pred = (counts[0][c] + counts[1][c]) as f64 / n;
            truth * pred
        })
        .sum::<f64>();
    if (1.0 - expected).abs() < 1e-15 {
        return Ok(0.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}

/// Outcome of the hindsight-optimal trigger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosthocOptimum {
    pub avg_cost: f64,
    /// Best trigger time per series.
    pub times: Vec<usize>,
}

impl PosthocOptimum {
    /// Median best trigger time over the series length.
    pub fn earliness(&self, length: usize) -> Result<f64> {
        let times: Vec<f64> = self.times.iter().map(|&t| t as f64).collect();
        Ok(median(&times)? / length as f64)
    }
}

/// Average over series of the smallest incurred cost over all grid steps,
/// the earliest step winning ties.
pub fn posthoc_optimal_cost(set: &ScoredSet, grid: &TimestampGrid, cost: &CostModel) -> Result<PosthocOptimum> {
    if set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    let mut times = Vec::with_capacity(set.len());
    for i in 0..set.len() {
        let row = &set.scores[i];
        if row.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: row.len(),
            });
        }
        let (mut best_step, mut best) = (0, f64::INFINITY);
        for (step, &score) in row.iter().enumerate() {
            let c = cost.incurred(predict(score), set.label(i), grid.time(step));
            if c < best {
                best = c;
                best_step = step;
            }
        }
        total += best;
        times.push(grid.time(best_step));
    }
    Ok(PosthocOptimum {
        avg_cost: total / set.len() as f64,
        times,
    })
}

/// Runs `model` over every series of `set`, in parallel.
pub fn run_trigger(model: &TriggerModel, set: &ScoredSet) -> Result<Vec<RunRecord>> {
    (0..set.len())
        .into_par_iter()
        .map(|i| {
            let d = model.decide_with_scores(set.values(i), &set.scores[i])?;
            Ok(RunRecord::new(i, d.step, d.time, d.prediction, set.label(i), &model.cost))
        })
        .collect()
}

pub fn run_sr(params: &SrParams, set: &ScoredSet, grid: &TimestampGrid, cost: &CostModel) -> Result<Vec<RunRecord>> {
    (0..set.len())
        .map(|i| {
            let d = sr_decide(params, &set.scores[i], grid)?;
            Ok(RunRecord::new(i, d.step, d.time, d.prediction, set.label(i), cost))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub avg_cost: f64,
    pub earliness: f64,
    pub kappa: f64,
    /// `|avg_cost - posthoc avg_cost|`.
    pub delta_cost: f64,
}

impl Metrics {
    pub fn from_records(records: &[RunRecord], length: usize, posthoc: &PosthocOptimum) -> Result<Self> {
        let avg = avg_cost(records)?;
        Ok(Self {
            avg_cost: avg,
            earliness: earliness(records, length)?,
            kappa: kappa(records)?,
            delta_cost: (avg - posthoc.avg_cost).abs(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub method: String,
    pub earliness: f64,
    pub kappa: f64,
    pub dominated: bool,
}

/// Flags points beaten by another point that is no later and no less
/// accurate, and strictly better on one of the two.
pub fn pareto_points(points: &[(String, f64, f64)]) -> Vec<ParetoPoint> {
    points
        .iter()
        .map(|(method, e, k)| {
            let dominated = points
                .iter()
                .any(|(_, e2, k2)| e2 <= e && k2 >= k && (e2 < e || k2 > k));
            ParetoPoint {
                method: method.clone(),
                earliness: *e,
                kappa: *k,
                dominated,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, LabeledSeries};
    use proptest::prelude::*;

    fn rec(time: usize, prediction: ClassId, label: ClassId, cost: &CostModel) -> RunRecord {
        RunRecord::new(0, 0, time, prediction, label, cost)
    }

    #[test]
    fn avg_cost_examples() {
        let cost = CostModel::zero_one(0.1, 10).unwrap();
        assert!((avg_cost(&[rec(5, 1, 0, &cost)]).unwrap() - 1.05).abs() < 1e-12);
        let free = CostModel::zero_one(0.0, 10).unwrap();
        assert_eq!(avg_cost(&[rec(1, 1, 1, &free), rec(1, 0, 0, &free)]).unwrap(), 0.0);
        let mut a = rec(1, 1, 1, &free);
        let mut b = a;
        a.delay = 0.2;
        b.delay = 0.4;
        assert!((avg_cost(&[a, b]).unwrap() - 0.3).abs() < 1e-12);
        assert!(avg_cost(&[]).is_err());
    }

    #[test]
    fn earliness_examples() {
        let cost = CostModel::zero_one(0.0, 10).unwrap();
        let at = |ts: &[usize]| ts.iter().map(|&t| rec(t, 1, 1, &cost)).collect::<Vec<_>>();
        assert_eq!(earliness(&at(&[10, 10]), 10).unwrap(), 1.0);
        assert_eq!(earliness(&at(&[1, 2, 9]), 10).unwrap(), 0.2);
        assert_eq!(earliness(&at(&[1, 2, 4, 9]), 10).unwrap(), 0.3);
    }

    #[test]
    fn kappa_examples() {
        let cost = CostModel::zero_one(0.0, 10).unwrap();
        let build = |tp: usize, tn: usize, fp: usize, fneg: usize| {
            let mut v = Vec::new();
            v.extend((0..tp).map(|_| rec(1, 1, 1, &cost)));
            v.extend((0..tn).map(|_| rec(1, 0, 0, &cost)));
            v.extend((0..fp).map(|_| rec(1, 1, 0, &cost)));
            v.extend((0..fneg).map(|_| rec(1, 0, 1, &cost)));
            v
        };
        assert!((kappa(&build(40, 40, 10, 10)).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(kappa(&build(10, 10, 0, 0)).unwrap(), 1.0);
        assert_eq!(kappa(&build(10, 0, 10, 0)).unwrap(), 0.0);
        assert_eq!(kappa(&build(10, 0, 0, 0)).unwrap(), 0.0);
    }

    fn scored(rows: Vec<(ClassId, Vec<f64>)>, length: usize) -> ScoredSet {
        let (labels, scores): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        let series = labels
            .into_iter()
            .map(|y| LabeledSeries::new(vec![0.0; length], y).unwrap())
            .collect();
        ScoredSet {
            dataset: Dataset::new(series).unwrap(),
            scores,
        }
    }

    #[test]
    fn posthoc_examples() {
        let grid = TimestampGrid::new(vec![2, 5, 10], 10).unwrap();
        let cost = CostModel::zero_one(0.3, 10).unwrap();
        let always_right = scored(vec![(1, vec![0.9; 3]), (0, vec![0.1; 3])], 10);
        let opt = posthoc_optimal_cost(&always_right, &grid, &cost).unwrap();
        assert_eq!(opt.times, vec![2, 2]);
        assert!((opt.avg_cost - cost.delay(2)).abs() < 1e-12);

        // brute force over a three-step chain
        let set = scored(
            vec![(1, vec![0.2, 0.7, 0.9]), (0, vec![0.6, 0.6, 0.4]), (1, vec![0.1, 0.2, 0.3])],
            10,
        );
        let opt = posthoc_optimal_cost(&set, &grid, &cost).unwrap();
        // series 0: 1.06, 0.15, 0.3; series 1: 1.06, 1.15, 0.3; series 2: 1.06, 1.15, 1.3
        assert_eq!(opt.times, vec![5, 10, 2]);
        assert!((opt.avg_cost - (0.15 + 0.3 + 1.06) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn pareto_flags() {
        let pts = vec![
            ("a".to_string(), 0.2, 0.8),
            ("b".to_string(), 0.3, 0.7),
            ("c".to_string(), 0.1, 0.5),
            ("d".to_string(), 0.2, 0.8),
        ];
        let flags: Vec<bool> = pareto_points(&pts).iter().map(|p| p.dominated).collect();
        assert_eq!(flags, vec![false, true, false, false]);
    }

    proptest! {
        #[test]
        fn cost_decomposes_and_kappa_is_swap_symmetric(
            raw in prop::collection::vec((1usize..=20, 0i64..2, 0i64..2), 1..60),
            alpha in 0.0f64..2.0,
        ) {
            let cost = CostModel::zero_one(alpha, 20).unwrap();
            let records: Vec<RunRecord> = raw.iter().map(|&(t, p, y)| rec(t, p, y, &cost)).collect();
            let total = avg_cost(&records).unwrap();
            let parts = mean_misclassification(&records).unwrap() + mean_delay(&records).unwrap();
            prop_assert!((total - parts).abs() < 1e-12);
            let swapped: Vec<RunRecord> = raw.iter().map(|&(t, p, y)| rec(t, 1 - p, 1 - y, &cost)).collect();
            prop_assert!((kappa(&records).unwrap() - kappa(&swapped).unwrap()).abs() < 1e-12);
            let k = kappa(&records).unwrap();
            prop_assert!((-1.0..=1.0).contains(&k));
            let e = earliness(&records, 20).unwrap();
            prop_assert!(e > 0.0 && e <= 1.0);
        }
    }
}

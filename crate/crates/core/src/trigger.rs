//! The four cost-based trigger variants: training from a scored meta set and
//! the online decision rule.
//!
//! Every variant partitions the meta-training series into groups at each
//! grid step and records, per group, the class prior and the confusion of
//! every current-or-later classifier on the group's members. They differ in
//! how groups are formed and how an incoming prefix is placed among them:
//!
//! | variant      | groups                                  | placement of a prefix             |
//! |--------------|-----------------------------------------|-----------------------------------|
//! | `K`          | one k-means run on full-length series   | soft membership, prefix distance  |
//! | `MultiK`     | one k-means run per step on prefixes    | soft membership at that step      |
//! | `GammaLite`  | equal-frequency confidence intervals    | interval of the current score     |
//! | `Gamma`      | as `GammaLite`, plus transition matrices| interval, propagated forward      |
//!
//! At step `t` the rule evaluates the expected cost of deciding at every
//! later grid step (or only the next one in myopic mode) and triggers when
//! deciding now is no worse than any of them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::{class_index, predict, ClassPrior, ConfusionMatrix, ScoreChain, ScoredSet};
use crate::clustering::{kmeans_fit, ClusterModel};
use crate::confidence::{GammaVector, IntervalPartition, TransitionMatrix};
use crate::cost::{
    expected_cost_from_intervals, expected_cost_gamma, expected_cost_grouped, CostModel, GroupTables,
};
use crate::dataset::{ClassId, TimestampGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    K,
    MultiK,
    GammaLite,
    Gamma,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::K, Variant::MultiK, Variant::GammaLite, Variant::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            Variant::K => "economy-k",
            Variant::MultiK => "economy-multi-k",
            Variant::GammaLite => "economy-gamma-lite",
            Variant::Gamma => "economy-gamma",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("economy-").unwrap_or(&key);
        match key {
            "k" => Ok(Variant::K),
            "multi-k" | "multik" => Ok(Variant::MultiK),
            "gamma-lite" | "γ-lite" => Ok(Variant::GammaLite),
            "gamma" | "γ" => Ok(Variant::Gamma),
            _ => Err(Error::InvalidParameter(format!("unknown variant {s:?}"))),
        }
    }
}

/// How far ahead the decision rule looks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Horizon {
    /// Every remaining grid step.
    #[default]
    Full,
    /// Only the next grid step.
    Myopic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Partition {
    /// One clustering of full-length series.
    Clusters(ClusterModel),
    /// One clustering per grid step, fitted on prefixes of that length.
    ClustersPerStep(Vec<ClusterModel>),
    /// Confidence intervals per grid step.
    Intervals(Vec<IntervalPartition>),
}

/// A trained trigger. It holds no classifier; scores come from the
/// [`ScoreChain`] it was trained against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerModel {
    pub variant: Variant,
    pub horizon: Horizon,
    /// Requested number of groups. Collapsed intervals can make the
    /// effective count smaller at some steps.
    pub k: usize,
    pub grid: TimestampGrid,
    pub cost: CostModel,
    pub partition: Partition,
    pub tables: GroupTables,
    /// `transitions[s]` maps step `s` to step `s + 1`; empty unless `Gamma`.
    #[serde(default)]
    pub transitions: Vec<TransitionMatrix>,
}

/// Outcome of the decision rule for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub step: usize,
    /// Trigger timestamp (prefix length).
    pub time: usize,
    pub prediction: ClassId,
    pub score: f64,
    /// Expected cost of deciding at each examined target step, starting now.
    pub expected_costs: Vec<f64>,
}

/// Trains `variant` on a scored meta-training set.
pub fn train(
    variant: Variant,
    meta: &ScoredSet,
    grid: &TimestampGrid,
    k: usize,
    seed: u64,
    cost: &CostModel,
) -> Result<TriggerModel> {
    match variant {
        Variant::K => train_economy_k(meta, grid, k, seed, cost),
        Variant::MultiK => train_economy_multi_k(meta, grid, k, seed, cost),
        Variant::GammaLite => train_economy_gamma_lite(meta, grid, k, cost),
        Variant::Gamma => train_economy_gamma(meta, grid, k, cost),
    }
}

fn check_meta(meta: &ScoredSet, grid: &TimestampGrid, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if meta.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if meta.dataset.length() != grid.length() {
        return Err(Error::LengthMismatch {
            expected: grid.length(),
            found: meta.dataset.length(),
        });
    }
    if meta.scores.iter().any(|row| row.len() != grid.len()) {
        return Err(Error::InvalidParameter(
            "score matrix does not match the grid".into(),
        ));
    }
    Ok(())
}

/// Builds priors and confusion tables from per-step group assignments.
/// `assignment[step][i]` is the group of series `i` at `step`.
fn build_tables(meta: &ScoredSet, assignment: &[Vec<usize>], groups: &[usize]) -> GroupTables {
    let steps = assignment.len();
    let mut priors = Vec::with_capacity(steps);
    let mut confusion = Vec::with_capacity(steps);
    for step in 0..steps {
        let k = groups[step];
        let mut class_counts = vec![[0u64; 2]; k];
        // counts[ahead][group][y][yhat]
        let mut counts = vec![vec![[[0u64; 2]; 2]; k]; steps - step];
        for (i, &g) in assignment[step].iter().enumerate() {
            let y = class_index(meta.label(i));
            class_counts[g][y] += 1;
            for (ahead, slot) in counts.iter_mut().enumerate() {
                let yhat = class_index(predict(meta.scores[i][step + ahead]));
                slot[g][y][yhat] += 1;
            }
        }
        priors.push(class_counts.into_iter().map(ClassPrior::from_counts).collect());
        confusion.push(
            counts
                .into_iter()
                .map(|per_group| per_group.into_iter().map(ConfusionMatrix::from_counts).collect())
                .collect(),
        );
    }
    GroupTables { priors, confusion }
}

/// Clusters full-length meta series once; groups are fixed across steps and
/// tables use hard nearest-centroid assignment.
pub fn train_economy_k(
    meta: &ScoredSet,
    grid: &TimestampGrid,
    k: usize,
    seed: u64,
    cost: &CostModel,
) -> Result<TriggerModel> {
    check_meta(meta, grid, k)?;
    let data: Vec<Vec<f64>> = meta.dataset.series().iter().map(|s| s.values.clone()).collect();
    let clusters = kmeans_fit(&data, k, seed)?;
    let fixed = data
        .iter()
        .map(|v| clusters.assign(v))
        .collect::<Result<Vec<_>>>()?;
    let assignment = vec![fixed; grid.len()];
    let tables = build_tables(meta, &assignment, &vec![k; grid.len()]);
    Ok(TriggerModel {
        variant: Variant::K,
        horizon: Horizon::Full,
        k,
        grid: grid.clone(),
        cost: cost.clone(),
        partition: Partition::Clusters(clusters),
        tables,
        transitions: Vec::new(),
    })
}

/// Clusters the meta prefixes separately at every step (same seed at each
/// step). Future confusion is measured on the members of the group formed
/// at the current step.
pub fn train_economy_multi_k(
    meta: &ScoredSet,
    grid: &TimestampGrid,
    k: usize,
    seed: u64,
    cost: &CostModel,
) -> Result<TriggerModel> {
    check_meta(meta, grid, k)?;
    let mut models = Vec::with_capacity(grid.len());
    let mut assignment = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        let prefixes: Vec<Vec<f64>> = meta
            .dataset
            .series()
            .iter()
            .map(|s| s.values[..t].to_vec())
            .collect();
        let clusters = kmeans_fit(&prefixes, k, seed)?;
        assignment.push(
            prefixes
                .iter()
                .map(|p| clusters.assign(p))
                .collect::<Result<Vec<_>>>()?,
        );
        models.push(clusters);
    }
    let tables = build_tables(meta, &assignment, &vec![k; grid.len()]);
    Ok(TriggerModel {
        variant: Variant::MultiK,
        horizon: Horizon::Full,
        k,
        grid: grid.clone(),
        cost: cost.clone(),
        partition: Partition::ClustersPerStep(models),
        tables,
        transitions: Vec::new(),
    })
}

fn interval_assignment(
    meta: &ScoredSet,
    grid: &TimestampGrid,
    k: usize,
) -> Result<(Vec<IntervalPartition>, Vec<Vec<usize>>)> {
    if meta.len() < k {
        return Err(Error::NotEnoughPoints {
            need: k,
            got: meta.len(),
        });
    }
    let mut partitions = Vec::with_capacity(grid.len());
    let mut assignment = Vec::with_capacity(grid.len());
    for step in 0..grid.len() {
        let scores: Vec<f64> = meta.scores.iter().map(|row| row[step]).collect();
        let partition = IntervalPartition::fit(&scores, k)?;
        assignment.push(scores.iter().map(|&s| partition.locate(s)).collect());
        partitions.push(partition);
    }
    Ok((partitions, assignment))
}

/// Groups are equal-frequency intervals of the meta scores at each step.
pub fn train_economy_gamma_lite(
    meta: &ScoredSet,
    grid: &TimestampGrid,
    k: usize,
    cost: &CostModel,
) -> Result<TriggerModel> {
    check_meta(meta, grid, k)?;
    let (partitions, assignment) = interval_assignment(meta, grid, k)?;
    let groups: Vec<usize> = partitions.iter().map(IntervalPartition::k).collect();
    let tables = build_tables(meta, &assignment, &groups);
    Ok(TriggerModel {
        variant: Variant::GammaLite,
        horizon: Horizon::Full,
        k,
        grid: grid.clone(),
        cost: cost.clone(),
        partition: Partition::Intervals(partitions),
        tables,
        transitions: Vec::new(),
    })
}

/// `GammaLite` plus smoothed interval transition matrices between
/// consecutive steps.
pub fn train_economy_gamma(
    meta: &ScoredSet,
    grid: &TimestampGrid,
    k: usize,
    cost: &CostModel,
) -> Result<TriggerModel> {
    check_meta(meta, grid, k)?;
    let (partitions, assignment) = interval_assignment(meta, grid, k)?;
    let groups: Vec<usize> = partitions.iter().map(IntervalPartition::k).collect();
    let tables = build_tables(meta, &assignment, &groups);
    let transitions = (0..grid.len().saturating_sub(1))
        .map(|step| {
            let mut counts = vec![vec![0u64; groups[step + 1]]; groups[step]];
            for (&from, &to) in assignment[step].iter().zip(&assignment[step + 1]) {
                counts[from][to] += 1;
            }
            TransitionMatrix::from_counts(counts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TriggerModel {
        variant: Variant::Gamma,
        horizon: Horizon::Full,
        k,
        grid: grid.clone(),
        cost: cost.clone(),
        partition: Partition::Intervals(partitions),
        tables,
        transitions,
    })
}

impl TriggerModel {
    pub fn with_cost(mut self, cost: CostModel) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.horizon = horizon;
        self
    }

    /// Structural consistency of a deserialized or hand-built model.
    pub fn validate(&self) -> Result<()> {
        let steps = self.grid.len();
        self.tables.validate(steps)?;
        if self.cost.length != self.grid.length() {
            return Err(Error::MalformedModel("cost model length differs from grid".into()));
        }
        let groups_at = |step: usize| self.tables.groups(step);
        match (&self.partition, self.variant) {
            (Partition::Clusters(c), Variant::K) => {
                if c.dim() != self.grid.length() || (0..steps).any(|s| groups_at(s) != c.k()) {
                    return Err(Error::MalformedModel("cluster model does not match tables".into()));
                }
            }
            (Partition::ClustersPerStep(cs), Variant::MultiK) => {
                if cs.len() != steps
                    || cs
                        .iter()
                        .enumerate()
                        .any(|(s, c)| c.dim() != self.grid.time(s) || c.k() != groups_at(s))
                {
                    return Err(Error::MalformedModel("per-step clusters do not match tables".into()));
                }
            }
            (Partition::Intervals(ps), Variant::GammaLite | Variant::Gamma) => {
                if ps.len() != steps || ps.iter().enumerate().any(|(s, p)| p.k() != groups_at(s)) {
                    return Err(Error::MalformedModel("intervals do not match tables".into()));
                }
            }
            _ => {
                return Err(Error::MalformedModel(format!(
                    "partition kind does not fit variant {}",
                    self.variant
                )))
            }
        }
        if self.variant == Variant::Gamma {
            if self.transitions.len() != steps - 1 {
                return Err(Error::MalformedModel(format!(
                    "expected {} transition matrices, found {}",
                    steps - 1,
                    self.transitions.len()
                )));
            }
            for (s, m) in self.transitions.iter().enumerate() {
                if m.shape() != (groups_at(s), groups_at(s + 1)) {
                    return Err(Error::MalformedModel(format!(
                        "transition matrix {s} has the wrong shape"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Probability of each group at `step` for an incoming prefix whose
    /// current classifier score is `score`.
    pub fn membership(&self, step: usize, prefix: &[f64], score: f64) -> Result<Vec<f64>> {
        match &self.partition {
            Partition::Clusters(c) => c.membership(prefix),
            Partition::ClustersPerStep(cs) => cs
                .get(step)
                .ok_or_else(|| Error::InvalidParameter(format!("step {step} outside the grid")))?
                .membership(prefix),
            Partition::Intervals(ps) => {
                let p = ps
                    .get(step)
                    .ok_or_else(|| Error::InvalidParameter(format!("step {step} outside the grid")))?;
                Ok(GammaVector::one_hot(p.k(), p.locate(score)).as_slice().to_vec())
            }
        }
    }

    /// Last target step examined from `step`.
    pub fn horizon_end(&self, step: usize) -> usize {
        let last = self.grid.last_step();
        match self.horizon {
            Horizon::Full => last,
            Horizon::Myopic => (step + 1).min(last),
        }
    }

    /// Expected cost of deciding at `target` given membership at `step`.
    pub fn expected_cost(&self, membership: &[f64], step: usize, target: usize) -> Result<f64> {
        match self.variant {
            Variant::Gamma => expected_cost_gamma(
                &self.tables,
                &self.transitions,
                &self.cost,
                &self.grid,
                &GammaVector::new(membership.to_vec())?,
                step,
                target,
            ),
            _ => expected_cost_grouped(&self.tables, &self.cost, &self.grid, membership, step, target),
        }
    }

    /// Expected costs for every target from `step` through the horizon.
    pub fn expected_costs(&self, step: usize, prefix: &[f64], score: f64) -> Result<Vec<f64>> {
        let membership = self.membership(step, prefix, score)?;
        let end = self.horizon_end(step);
        if self.variant != Variant::Gamma {
            return (step..=end)
                .map(|target| self.expected_cost(&membership, step, target))
                .collect();
        }
        // push the distribution one matrix at a time instead of from scratch per target
        let mut gamma = GammaVector::new(membership)?;
        let mut costs = Vec::with_capacity(end - step + 1);
        for target in step..=end {
            if target > step {
                gamma = self
                    .transitions
                    .get(target - 1)
                    .ok_or_else(|| Error::MalformedModel(format!("no transition matrix into step {target}")))?
                    .left_multiply(&gamma)?;
            }
            costs.push(expected_cost_from_intervals(&self.tables, &self.cost, &self.grid, &gamma, target)?);
        }
        Ok(costs)
    }

    pub fn session(&self) -> DecisionSession<'_> {
        DecisionSession {
            model: self,
            next_step: 0,
            decision: None,
        }
    }

    /// Runs the decision rule over a complete series whose grid scores are
    /// already known. Only the prefix and score of the current step are
    /// consulted at each step.
    pub fn decide_with_scores(&self, values: &[f64], scores: &[f64]) -> Result<Decision> {
        if values.len() != self.grid.length() || scores.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.length(),
                found: values.len(),
            });
        }
        let mut session = self.session();
        for (step, &score) in scores.iter().enumerate() {
            if let Some(d) = session.push(&values[..self.grid.time(step)], score)? {
                return Ok(d);
            }
        }
        session.finish()
    }

    /// Runs the decision rule, scoring prefixes with `chain` as they arrive.
    pub fn decide(&self, values: &[f64], chain: &dyn ScoreChain) -> Result<Decision> {
        if values.len() != self.grid.length() {
            return Err(Error::LengthMismatch {
                expected: self.grid.length(),
                found: values.len(),
            });
        }
        let mut session = self.session();
        for step in 0..self.grid.len() {
            let prefix = &values[..self.grid.time(step)];
            let score = chain.score_at(step, prefix)?;
            if let Some(d) = session.push(prefix, score)? {
                return Ok(d);
            }
        }
        session.finish()
    }
}

/// Per-series state of the online rule. Feed it the prefix at each grid
/// timestamp in order; it returns a decision once it triggers.
#[derive(Debug)]
pub struct DecisionSession<'m> {
    model: &'m TriggerModel,
    next_step: usize,
    decision: Option<Decision>,
}

impl DecisionSession<'_> {
    /// Step whose prefix is expected next.
    pub fn next_step(&self) -> usize {
        self.next_step
    }

    pub fn push(&mut self, prefix: &[f64], score: f64) -> Result<Option<Decision>> {
        if let Some(d) = &self.decision {
            return Ok(Some(d.clone()));
        }
        let grid = &self.model.grid;
        let step = self.next_step;
        if prefix.len() != grid.time(step) {
            return Err(Error::LengthMismatch {
                expected: grid.time(step),
                found: prefix.len(),
            });
        }
        let costs = self.model.expected_costs(step, prefix, score)?;
        // first minimum, so ties go to deciding now
        let best = costs
            .iter()
            .enumerate()
            .fold(0, |best, (i, c)| if *c < costs[best] { i } else { best });
        if best == 0 || step == grid.last_step() {
            let decision = Decision {
                step,
                time: grid.time(step),
                prediction: predict(score),
                score,
                expected_costs: costs,
            };
            self.decision = Some(decision.clone());
            return Ok(Some(decision));
        }
        self.next_step += 1;
        Ok(None)
    }

    pub fn finish(self) -> Result<Decision> {
        self.decision.ok_or(Error::StreamEnded {
            step: self.next_step,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, LabeledSeries};

    fn grid4() -> TimestampGrid {
        TimestampGrid::new(vec![1, 2, 3, 4], 4).unwrap()
    }

    /// A scored set where series `i` has the given label and score row.
    fn scored(rows: Vec<(ClassId, Vec<f64>, Vec<f64>)>) -> ScoredSet {
        let mut series = Vec::new();
        let mut scores = Vec::new();
        for (label, values, row) in rows {
            series.push(LabeledSeries::new(values, label).unwrap());
            scores.push(row);
        }
        ScoredSet {
            dataset: Dataset::new(series).unwrap(),
            scores,
        }
    }

    fn two_regime_meta() -> ScoredSet {
        let mut rows = Vec::new();
        for i in 0..20 {
            let label = ClassId::from(i < 10);
            let level = if label == 1 { 5.0 } else { -5.0 };
            let jitter = i as f64 * 0.01;
            let score = if label == 1 { 0.8 } else { 0.2 };
            rows.push((label, vec![level + jitter; 4], vec![score; 4]));
        }
        scored(rows)
    }

    #[test]
    fn k_one_equals_global_tables() {
        let meta = two_regime_meta();
        let cost = CostModel::zero_one(0.1, 4).unwrap();
        let m = train_economy_k(&meta, &grid4(), 1, 0, &cost).unwrap();
        m.validate().unwrap();
        let global_prior = ClassPrior::from_labels(meta.dataset.labels());
        for step in 0..4 {
            assert_eq!(m.tables.priors[step][0], global_prior);
            for ahead in 0..4 - step {
                let pairs = (0..meta.len()).map(|i| (meta.label(i), predict(meta.scores[i][step + ahead])));
                assert_eq!(m.tables.confusion[step][ahead][0], ConfusionMatrix::from_pairs(pairs));
            }
        }
    }

    #[test]
    fn k_two_separates_regimes() {
        let meta = two_regime_meta();
        let cost = CostModel::zero_one(0.1, 4).unwrap();
        let m = train_economy_k(&meta, &grid4(), 2, 3, &cost).unwrap();
        let p = &m.tables.priors[0];
        let majority: Vec<bool> = p.iter().map(|prior| prior.prob(1) > 0.5).collect();
        assert_ne!(majority[0], majority[1]);
        assert_eq!(m.tables.confusion.len(), 4);
        assert!(m.tables.confusion.iter().enumerate().all(|(s, c)| c.len() == 4 - s && c.iter().all(|g| g.len() == 2)));
    }

    #[test]
    fn multi_k_final_partition_matches_k() {
        let meta = two_regime_meta();
        let cost = CostModel::zero_one(0.1, 4).unwrap();
        let k = train_economy_k(&meta, &grid4(), 2, 9, &cost).unwrap();
        let mk = train_economy_multi_k(&meta, &grid4(), 2, 9, &cost).unwrap();
        mk.validate().unwrap();
        let (Partition::Clusters(full), Partition::ClustersPerStep(per_step)) = (&k.partition, &mk.partition) else {
            panic!("unexpected partitions");
        };
        assert_eq!(per_step.len(), 4);
        assert_eq!(per_step[3].centroids, full.centroids);
    }

    #[test]
    fn multi_k_membership_can_drift() {
        // series 0 starts with the "low" group and ends with the "high" one
        let mut rows = Vec::new();
        for i in 0..6 {
            rows.push((0, vec![0.0 + i as f64 * 0.01; 4], vec![0.3; 4]));
            rows.push((1, vec![10.0 + i as f64 * 0.01; 4], vec![0.7; 4]));
        }
        rows.push((1, vec![0.0, 0.0, 30.0, 30.0], vec![0.5; 4]));
        let meta = scored(rows);
        let cost = CostModel::zero_one(0.1, 4).unwrap();
        let mk = train_economy_multi_k(&meta, &grid4(), 2, 1, &cost).unwrap();
        let Partition::ClustersPerStep(per_step) = &mk.partition else { unreachable!() };
        let drifter = &meta.dataset.series()[12].values;
        let low_at = |s: usize| {
            let c = &per_step[s];
            let g = c.assign(&drifter[..s + 1]).unwrap();
            c.assign(&vec![0.0; s + 1]).unwrap() == g
        };
        assert!(low_at(0));
        assert!(!low_at(3));
    }

    #[test]
    fn gamma_lite_k_one_is_global() {
        let meta = two_regime_meta();
        let cost = CostModel::zero_one(0.1, 4).unwrap();
        let m = train_economy_gamma_lite(&meta, &grid4(), 1, &cost).unwrap();
        let Partition::Intervals(ps) = &m.partition else { unreachable!() };
        assert!(ps.iter().all(|p| p.boundaries() == [0.0, 1.0]));
        assert_eq!(m.tables.priors[2][0], ClassPrior::from_labels(meta.dataset.labels()));
    }

    #[test]
    fn gamma_constant_scores_give_near_identity() {
        // each series keeps its own score at every step
        let rows = (0..40)
            .map(|i| {
                let s = (i as f64 + 0.5) / 40.0;
                (ClassId::from(s > 0.5), vec![s; 4], vec![s; 4])
            })
            .collect();
        let meta = scored(rows);
        let cost = CostModel::zero_one(0.1, 4).unwrap();
        let m = train_economy_gamma(&meta, &grid4(), 4, &cost).unwrap();
        m.validate().unwrap();
        assert_eq!(m.transitions.len(), 3);
        for t in &m.transitions {
            assert_eq!(t.shape(), (4, 4));
            for (i, row) in t.rows().iter().enumerate() {
                // 10 members per interval, all staying: (10 + 1) / (10 + 4)
                assert!((row[i] - 11.0 / 14.0).abs() < 1e-12);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        let one = train_economy_gamma(&meta, &grid4(), 1, &cost).unwrap();
        assert!(one.transitions.iter().all(|t| t.rows() == [vec![1.0]]));
    }

    #[test]
    fn gamma_incremental_costs_match_per_target() {
        let rows = (0..30)
            .map(|i| {
                let s = ((i * 7) % 30) as f64 / 30.0;
                let drift: Vec<f64> = (0..4).map(|t| (s + 0.1 * t as f64 * (i % 3) as f64).min(0.99)).collect();
                (ClassId::from(i % 2 == 0), vec![s; 4], drift)
            })
            .collect();
        let meta = scored(rows);
        let cost = CostModel::zero_one(0.3, 4).unwrap();
        let m = train_economy_gamma(&meta, &grid4(), 3, &cost).unwrap();
        for step in 0..4 {
            for score in [0.05, 0.5, 0.95] {
                let costs = m.expected_costs(step, &[0.0; 4][..step + 1], score).unwrap();
                let member = m.membership(step, &[], score).unwrap();
                for (j, c) in costs.iter().enumerate() {
                    let direct = m.expected_cost(&member, step, step + j).unwrap();
                    assert!((c - direct).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identical_scores_collapse_intervals() {
        let rows = (0..10).map(|i| (ClassId::from(i % 2 == 0), vec![0.0; 4], vec![0.6; 4])).collect();
        let meta = scored(rows);
        let cost = CostModel::zero_one(0.1, 4).unwrap();
        let m = train_economy_gamma(&meta, &grid4(), 3, &cost).unwrap();
        assert!((0..4).all(|s| m.tables.groups(s) == 1));
        m.validate().unwrap();
    }

    #[test]
    fn too_few_meta_series() {
        let meta = two_regime_meta();
        let cost = CostModel::zero_one(0.1, 4).unwrap();
        assert!(train_economy_gamma_lite(&meta, &grid4(), 21, &cost).is_err());
        assert!(train_economy_k(&meta, &grid4(), 21, 0, &cost).is_err());
    }

    /// Single group whose misclassification term at step `s` is `errors[s]`
    /// under 0/1 costs with prior (0.5, 0.5).
    fn hand_model(errors: &[f64], alpha: f64, length: usize, times: Vec<usize>) -> TriggerModel {
        let grid = TimestampGrid::new(times, length).unwrap();
        let steps = grid.len();
        let conf = |e: f64| ConfusionMatrix {
            probs: [[1.0 - e, e], [e, 1.0 - e]],
            counts: [[0; 2]; 2],
        };
        TriggerModel {
            variant: Variant::GammaLite,
            horizon: Horizon::Full,
            k: 1,
            grid: grid.clone(),
            cost: CostModel::zero_one(alpha, length).unwrap(),
            partition: Partition::Intervals(vec![IntervalPartition::single(); steps]),
            tables: GroupTables {
                priors: vec![vec![ClassPrior([0.5, 0.5])]; steps],
                confusion: (0..steps)
                    .map(|s| (s..steps).map(|t| vec![conf(errors[t])]).collect())
                    .collect(),
            },
            transitions: Vec::new(),
        }
    }

    #[test]
    fn ties_trigger_immediately() {
        let m = hand_model(&[0.3; 4], 0.0, 4, vec![1, 2, 3, 4]);
        let d = m.decide_with_scores(&[0.0; 4], &[0.9; 4]).unwrap();
        assert_eq!(d.step, 0);
        assert_eq!(d.prediction, 1);
    }

    #[test]
    fn huge_alpha_triggers_first() {
        let m = hand_model(&[0.5, 0.4, 0.0, 0.0], 10.0, 4, vec![1, 2, 3, 4]);
        assert_eq!(m.decide_with_scores(&[0.0; 4], &[0.1; 4]).unwrap().time, 1);
    }

    #[test]
    fn waits_for_the_accuracy_jump() {
        // grid every 10% of T = 20; error 0.35 until 0.5T, then 0.05.
        // f(target) = err(target) + 0.1 * t/T, minimized at t = 10.
        let times: Vec<usize> = (1..=10).map(|j| 2 * j).collect();
        let errors: Vec<f64> = times.iter().map(|&t| if t < 10 { 0.35 } else { 0.05 }).collect();
        let m = hand_model(&errors, 0.1, 20, times);
        let d = m.decide_with_scores(&[0.0; 20], &[0.2; 10]).unwrap();
        assert_eq!(d.time, 10);
        // the myopic rule sees no gain one step ahead and stops at once
        let myopic = m.with_horizon(Horizon::Myopic);
        assert_eq!(myopic.decide_with_scores(&[0.0; 20], &[0.2; 10]).unwrap().time, 2);
    }

    #[test]
    fn session_requires_grid_prefixes() {
        let m = hand_model(&[0.3, 0.2, 0.1, 0.0], 0.0, 4, vec![1, 2, 3, 4]);
        let mut s = m.session();
        assert!(s.push(&[0.0, 0.0], 0.5).is_err());
        assert!(s.push(&[0.0], 0.5).unwrap().is_none());
        assert!(matches!(s.finish(), Err(Error::StreamEnded { step: 1 })));
        let mut s = m.session();
        for t in 1..=4 {
            if let Some(d) = s.push(&vec![0.0; t][..], 0.7).unwrap() {
                assert_eq!(d.time, 4);
            }
        }
        assert_eq!(s.finish().unwrap().time, 4);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("gamma".parse::<Variant>().unwrap(), Variant::Gamma);
        assert!("sr".parse::<Variant>().is_err());
    }
}

//! Misclassification and delay costs, and the expected cost of deciding at
//! a current or future grid step.
//!
//! Steps are grid indices. Deciding `ahead` steps after `step` means deciding
//! at `grid.time(step + ahead)`.

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassPrior, ConfusionMatrix};
use crate::confidence::{GammaVector, TransitionMatrix};
use crate::dataset::{ClassId, TimestampGrid};
use crate::error::{Error, Result};

/// `C_m(ŷ | y)` plus a linear delay cost `α · t / T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Indexed `[y][ŷ]`.
    pub misclassification: [[f64; 2]; 2],
    pub alpha: f64,
    /// Series length `T`.
    pub length: usize,
}

impl CostModel {
    /// 0/1 misclassification cost.
    pub fn zero_one(alpha: f64, length: usize) -> Result<Self> {
        Self::new([[0.0, 1.0], [1.0, 0.0]], alpha, length)
    }

    pub fn new(misclassification: [[f64; 2]; 2], alpha: f64, length: usize) -> Result<Self> {
        if misclassification.iter().flatten().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidParameter(
                "misclassification costs must be finite and non-negative".into(),
            ));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} must be >= 0")));
        }
        if length == 0 {
            return Err(Error::InvalidParameter("series length is zero".into()));
        }
        Ok(Self {
            misclassification,
            alpha,
            length,
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.misclassification, alpha, self.length)
    }

    /// `α · t / T`.
    pub fn delay(&self, t: usize) -> f64 {
        self.alpha * t as f64 / self.length as f64
    }

    pub fn misclassification(&self, yhat: ClassId, y: ClassId) -> f64 {
        self.misclassification[usize::from(y != 0)][usize::from(yhat != 0)]
    }

    /// Cost actually paid for predicting `yhat` at time `t` when the truth is `y`.
    pub fn incurred(&self, yhat: ClassId, y: ClassId, t: usize) -> f64 {
        self.misclassification(yhat, y) + self.delay(t)
    }

    /// `Σ_y P(y) Σ_ŷ P(ŷ|y) C_m(ŷ|y)` for one group.
    pub fn expected_misclassification(&self, prior: &ClassPrior, confusion: &ConfusionMatrix) -> f64 {
        (0..2)
            .map(|y| {
                prior.prob(y)
                    * (0..2)
                        .map(|yhat| confusion.prob(yhat, y) * self.misclassification[y][yhat])
                        .sum::<f64>()
            })
            .sum()
    }
}

/// Per-step group statistics shared by every variant.
///
/// `priors[step][k]` is the class prior within group `k` formed at `step`;
/// `confusion[step][ahead][k]` is the confusion of the classifier at
/// `step + ahead` over the members of that same group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTables {
    pub priors: Vec<Vec<ClassPrior>>,
    pub confusion: Vec<Vec<Vec<ConfusionMatrix>>>,
}

impl GroupTables {
    pub fn steps(&self) -> usize {
        self.priors.len()
    }

    /// Number of groups formed at `step`.
    pub fn groups(&self, step: usize) -> usize {
        self.priors[step].len()
    }

    /// Checks that every `(step, ahead, group)` cell exists for a grid of `steps`.
    pub fn validate(&self, steps: usize) -> Result<()> {
        if self.priors.len() != steps || self.confusion.len() != steps {
            return Err(Error::MalformedModel(format!(
                "tables cover {} steps, grid has {steps}",
                self.priors.len()
            )));
        }
        for (step, (priors, confusion)) in self.priors.iter().zip(&self.confusion).enumerate() {
            if priors.is_empty() {
                return Err(Error::MalformedModel(format!("step {step} has no groups")));
            }
            if confusion.len() != steps - step {
                return Err(Error::MalformedModel(format!(
                    "step {step} has {} future confusion tables, expected {}",
                    confusion.len(),
                    steps - step
                )));
            }
            if let Some(ahead) = confusion.iter().position(|c| c.len() != priors.len()) {
                return Err(Error::MalformedModel(format!(
                    "step {step} ahead {ahead}: group count mismatch"
                )));
            }
        }
        Ok(())
    }

    fn confusion(&self, step: usize, target: usize, group: usize) -> Result<&ConfusionMatrix> {
        self.confusion
            .get(step)
            .and_then(|c| c.get(target.checked_sub(step)?))
            .and_then(|c| c.get(group))
            .ok_or_else(|| {
                Error::MalformedModel(format!(
                    "no confusion table for step {step}, target {target}, group {group}"
                ))
            })
    }

    fn prior(&self, step: usize, group: usize) -> Result<&ClassPrior> {
        self.priors
            .get(step)
            .and_then(|p| p.get(group))
            .ok_or_else(|| Error::MalformedModel(format!("no prior for step {step}, group {group}")))
    }
}

fn check_steps(grid: &TimestampGrid, step: usize, target: usize) -> Result<()> {
    if target < step || target >= grid.len() {
        return Err(Error::InvalidParameter(format!(
            "target step {target} must lie in [{step}, {})",
            grid.len()
        )));
    }
    Ok(())
}

/// Expected cost of deciding at `target` for a series observed up to `step`,
/// with group membership and priors frozen at `step`:
///
/// `Σ_k P(g_k|x_t) Σ_y P_t(y|g_k) Σ_ŷ P_{t+τ}(ŷ|y,g_k) C_m(ŷ|y) + C_d(t+τ)`.
///
/// `target == step` gives the cost of deciding now.
pub fn expected_cost_grouped(
    tables: &GroupTables,
    cost: &CostModel,
    grid: &TimestampGrid,
    membership: &[f64],
    step: usize,
    target: usize,
) -> Result<f64> {
    check_steps(grid, step, target)?;
    if membership.len() != tables.groups(step) {
        return Err(Error::MalformedModel(format!(
            "membership has {} entries, step {step} has {} groups",
            membership.len(),
            tables.groups(step)
        )));
    }
    let mut total = 0.0;
    for (group, &weight) in membership.iter().enumerate() {
        let prior = tables.prior(step, group)?;
        let confusion = tables.confusion(step, target, group)?;
        total += weight * cost.expected_misclassification(prior, confusion);
    }
    Ok(total + cost.delay(grid.time(target)))
}

/// Pushes a distribution over confidence intervals at `step` forward through
/// the transition matrices up to `target`.
pub fn propagate_gamma(
    transitions: &[TransitionMatrix],
    gamma: &GammaVector,
    step: usize,
    target: usize,
) -> Result<GammaVector> {
    if target < step || target > transitions.len() {
        return Err(Error::InvalidParameter(format!(
            "cannot propagate from step {step} to {target} with {} transition matrices",
            transitions.len()
        )));
    }
    let mut current = gamma.clone();
    for matrix in &transitions[step..target] {
        current = matrix.left_multiply(&current)?;
    }
    Ok(current)
}

/// Expected cost of deciding at `target` given the interval distribution
/// `gamma` at `step`, using the interval statistics of the target step:
///
/// `Σ_j γ^j_{t+τ} Σ_y P(y|I^j_{t+τ}) Σ_ŷ P_{t+τ}(ŷ|y,I^j_{t+τ}) C_m(ŷ|y) + C_d(t+τ)`.
pub fn expected_cost_gamma(
    tables: &GroupTables,
    transitions: &[TransitionMatrix],
    cost: &CostModel,
    grid: &TimestampGrid,
    gamma: &GammaVector,
    step: usize,
    target: usize,
) -> Result<f64> {
    check_steps(grid, step, target)?;
    let future = propagate_gamma(transitions, gamma, step, target)?;
    expected_cost_from_intervals(tables, cost, grid, &future, target)
}

/// Cost of deciding at `target` given an already propagated interval
/// distribution at `target`.
pub fn expected_cost_from_intervals(
    tables: &GroupTables,
    cost: &CostModel,
    grid: &TimestampGrid,
    future: &GammaVector,
    target: usize,
) -> Result<f64> {
    check_steps(grid, target, target)?;
    if future.len() != tables.groups(target) {
        return Err(Error::MalformedModel(format!(
            "propagated distribution has {} entries, step {target} has {} intervals",
            future.len(),
            tables.groups(target)
        )));
    }
    let mut total = 0.0;
    for (interval, &weight) in future.iter().enumerate() {
        let prior = tables.prior(target, interval)?;
        let confusion = tables.confusion(target, target, interval)?;
        total += weight * cost.expected_misclassification(prior, confusion);
    }
    Ok(total + cost.delay(grid.time(target)))
}

//! Cross-dataset analyses over result rows: pairwise Wilcoxon tables,
//! Friedman/Nemenyi rankings, Pareto points and per-dataset slope selection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bench::ResultRow;
use crate::error::{Error, Result};
use crate::evaluation::{pareto_points, ParetoPoint};
use crate::stats::{friedman_nemenyi, wilcoxon_signed_rank, Direction, FriedmanResult, WilcoxonResult};

/// Significance level of every test reported here.
pub const SIGNIFICANCE: f64 = 0.05;

/// Distinct slopes in first-appearance order.
pub fn alphas(rows: &[ResultRow]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for r in rows {
        if !out.iter().any(|a| a.to_bits() == r.alpha.to_bits()) {
            out.push(r.alpha);
        }
    }
    out
}

/// Distinct methods in first-appearance order.
pub fn methods(rows: &[ResultRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.method) {
            out.push(r.method.clone());
        }
    }
    out
}

/// AvgCost matrix `[method][dataset]` at one slope. Every method must cover
/// the same datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    pub avg_cost: Vec<Vec<f64>>,
}

pub fn align(rows: &[ResultRow], alpha: f64) -> Result<Aligned> {
    let at: Vec<&ResultRow> = rows.iter().filter(|r| r.alpha.to_bits() == alpha.to_bits()).collect();
    let methods: Vec<String> = methods(rows)
        .into_iter()
        .filter(|m| at.iter().any(|r| &r.method == m))
        .collect();
    let datasets: Vec<String> = at
        .iter()
        .map(|r| r.dataset.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut avg_cost = vec![vec![f64::NAN; datasets.len()]; methods.len()];
    for r in &at {
        let m = methods.iter().position(|x| x == &r.method).expect("collected above");
        let d = datasets.binary_search(&r.dataset).expect("collected above");
        if !avg_cost[m][d].is_nan() {
            return Err(Error::Misaligned(format!(
                "duplicate row for {} on {} at alpha {alpha}",
                r.method, r.dataset
            )));
        }
        avg_cost[m][d] = r.avg_cost;
    }
    for (m, row) in avg_cost.iter().enumerate() {
        if let Some(d) = row.iter().position(|v| v.is_nan()) {
            return Err(Error::Misaligned(format!(
                "{} has no result for {} at alpha {alpha}",
                methods[m], datasets[d]
            )));
        }
    }
    Ok(Aligned {
        methods,
        datasets,
        avg_cost,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// The reference has significantly lower AvgCost.
    #[serde(rename = "better")]
    Better,
    #[serde(rename = "n.s.")]
    NotSignificant,
    /// The reference has significantly higher AvgCost.
    #[serde(rename = "worse")]
    Worse,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Better => "better",
            Outcome::NotSignificant => "n.s.",
            Outcome::Worse => "worse",
        }
    }

    pub fn from_test(result: &WilcoxonResult) -> Self {
        if result.p_value >= SIGNIFICANCE {
            return Outcome::NotSignificant;
        }
        match result.direction {
            Direction::FirstLess => Outcome::Better,
            Direction::FirstGreater => Outcome::Worse,
            Direction::Balanced => Outcome::NotSignificant,
        }
    }
}

/// Reference method against one other method at one slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonCell {
    pub alpha: f64,
    pub reference: String,
    pub method: String,
    pub datasets: usize,
    pub test: Option<WilcoxonResult>,
    /// Why no test was run, if none was.
    pub note: Option<String>,
    pub outcome: Outcome,
}

fn wilcoxon_cell(alpha: f64, aligned: &Aligned, reference: usize, other: usize) -> Result<WilcoxonCell> {
    let mut cell = WilcoxonCell {
        alpha,
        reference: aligned.methods[reference].clone(),
        method: aligned.methods[other].clone(),
        datasets: aligned.datasets.len(),
        test: None,
        note: None,
        outcome: Outcome::NotSignificant,
    };
    match wilcoxon_signed_rank(&aligned.avg_cost[reference], &aligned.avg_cost[other]) {
        Ok(t) => {
            cell.outcome = Outcome::from_test(&t);
            cell.test = Some(t);
        }
        Err(e @ Error::TooFewPairs { .. }) => cell.note = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(cell)
}

/// One row per slope, one cell per non-reference method: does the reference
/// method beat it on AvgCost across datasets?
pub fn wilcoxon_table(rows: &[ResultRow], reference: &str) -> Result<Vec<WilcoxonCell>> {
    let mut cells = Vec::new();
    for alpha in alphas(rows) {
        let aligned = align(rows, alpha)?;
        let r = aligned
            .methods
            .iter()
            .position(|m| m == reference)
            .ok_or_else(|| Error::Misaligned(format!("no rows for {reference} at alpha {alpha}")))?;
        for other in 0..aligned.methods.len() {
            if other != r {
                cells.push(wilcoxon_cell(alpha, &aligned, r, other)?);
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NemenyiReport {
    pub alpha: f64,
    pub methods: Vec<String>,
    pub datasets: usize,
    pub result: FriedmanResult,
}

impl NemenyiReport {
    pub fn groups_named(&self) -> Vec<Vec<String>> {
        self.result
            .groups
            .iter()
            .map(|g| g.iter().map(|&i| self.methods[i].clone()).collect())
            .collect()
    }
}

pub fn nemenyi_table(rows: &[ResultRow]) -> Result<Vec<NemenyiReport>> {
    alphas(rows)
        .into_iter()
        .map(|alpha| {
            let aligned = align(rows, alpha)?;
            Ok(NemenyiReport {
                alpha,
                datasets: aligned.datasets.len(),
                result: friedman_nemenyi(&aligned.avg_cost)?,
                methods: aligned.methods,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub alpha: f64,
    pub method: String,
    pub mean_earliness: f64,
    pub mean_kappa: f64,
    pub dominated: bool,
}

/// Per slope and method: mean earliness and mean kappa across datasets,
/// flagged when another method at the same slope dominates.
pub fn pareto_table(rows: &[ResultRow]) -> Vec<ParetoRow> {
    let mut out = Vec::new();
    for alpha in alphas(rows) {
        let pts: Vec<(String, f64, f64)> = methods(rows)
            .into_iter()
            .filter_map(|m| {
                let sel: Vec<&ResultRow> = rows
                    .iter()
                    .filter(|r| r.method == m && r.alpha.to_bits() == alpha.to_bits())
                    .collect();
                if sel.is_empty() {
                    return None;
                }
                let n = sel.len() as f64;
                let e = sel.iter().map(|r| r.earliness).sum::<f64>() / n;
                let k = sel.iter().map(|r| r.kappa).sum::<f64>() / n;
                Some((m, e, k))
            })
            .collect();
        out.extend(pareto_points(&pts).into_iter().map(|p: ParetoPoint| ParetoRow {
            alpha,
            method: p.method,
            mean_earliness: p.earliness,
            mean_kappa: p.kappa,
            dominated: p.dominated,
        }));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaChoice {
    pub dataset: String,
    pub alpha: f64,
    /// Largest minus smallest AvgCost across methods at that slope.
    pub spread: f64,
}

/// For each dataset, the slope at which methods differ most in AvgCost
/// (smallest slope on ties).
pub fn select_alpha(rows: &[ResultRow]) -> Vec<AlphaChoice> {
    let datasets: BTreeSet<&str> = rows.iter().map(|r| r.dataset.as_str()).collect();
    let mut slopes = alphas(rows);
    slopes.sort_by(f64::total_cmp);
    datasets
        .into_iter()
        .filter_map(|d| {
            let mut best: Option<AlphaChoice> = None;
            for &alpha in &slopes {
                let costs: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.dataset == d && r.alpha.to_bits() == alpha.to_bits())
                    .map(|r| r.avg_cost)
                    .collect();
                if costs.is_empty() {
                    continue;
                }
                let spread = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - costs.iter().cloned().fold(f64::INFINITY, f64::min);
                if best.as_ref().is_none_or(|b| spread > b.spread) {
                    best = Some(AlphaChoice {
                        dataset: d.to_string(),
                        alpha,
                        spread,
                    });
                }
            }
            best
        })
        .collect()
}

/// Statistical tests stored in a benchmark summary for one slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaStatistics {
    pub alpha: f64,
    pub friedman: Option<NemenyiReport>,
    pub friedman_note: Option<String>,
    /// Every unordered pair of methods, first listed method as reference.
    pub wilcoxon: Vec<WilcoxonCell>,
}

/// Every test that the data supports, with a note where one is skipped.
pub fn alpha_statistics(rows: &[ResultRow]) -> Vec<AlphaStatistics> {
    alphas(rows)
        .into_iter()
        .map(|alpha| {
            let mut s = AlphaStatistics {
                alpha,
                friedman: None,
                friedman_note: None,
                wilcoxon: Vec::new(),
            };
            let aligned = match align(rows, alpha) {
                Ok(a) => a,
                Err(e) => {
                    s.friedman_note = Some(e.to_string());
                    return s;
                }
            };
            match friedman_nemenyi(&aligned.avg_cost) {
                Ok(result) => {
                    s.friedman = Some(NemenyiReport {
                        alpha,
                        methods: aligned.methods.clone(),
                        datasets: aligned.datasets.len(),
                        result,
                    })
                }
                Err(e) => s.friedman_note = Some(e.to_string()),
            }
            for i in 0..aligned.methods.len() {
                for j in i + 1..aligned.methods.len() {
                    if let Ok(cell) = wilcoxon_cell(alpha, &aligned, i, j) {
                        s.wilcoxon.push(cell);
                    }
                }
            }
            s
        })
        .collect()
}

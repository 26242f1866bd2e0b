//! Rank-based tests for comparing methods: Wilcoxon signed-rank for two
//! paired samples, Friedman with the Nemenyi critical difference for many.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Fewest non-zero differences the signed-rank test accepts.
pub const MIN_WILCOXON_PAIRS: usize = 6;
/// Largest sample size for which the exact null distribution is used.
pub const EXACT_WILCOXON_MAX: usize = 25;

/// Studentized range over √2 at the 0.05 level, for 2 to 10 methods.
pub const NEMENYI_Q05: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];

/// Average ranks (1-based, ascending) with ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Which sample tends to be larger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    FirstGreater,
    FirstLess,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Non-zero differences used.
    pub n: usize,
    /// Two-sided.
    pub p_value: f64,
    pub exact: bool,
    pub direction: Direction,
}

/// Two-sided Wilcoxon signed-rank test on `a - b`. Zero differences are
/// dropped and tied magnitudes share average ranks. Up to 25 pairs the
/// p-value comes from the exact null distribution of the observed ranks;
/// beyond that from a tie-corrected normal approximation with continuity
/// correction.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::Misaligned(format!("{} vs {} paired values", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n < MIN_WILCOXON_PAIRS {
        return Err(Error::TooFewPairs {
            found: n,
            need: MIN_WILCOXON_PAIRS,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    // average ranks are multiples of 1/2; doubling makes them integers
    let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
    let plus2: u64 = doubled.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let total2: u64 = doubled.iter().sum();
    let minus2 = total2 - plus2;
    let (w_plus, w_minus) = (plus2 as f64 / 2.0, minus2 as f64 / 2.0);
    let direction = match plus2.cmp(&minus2) {
        std::cmp::Ordering::Greater => Direction::FirstGreater,
        std::cmp::Ordering::Less => Direction::FirstLess,
        std::cmp::Ordering::Equal => Direction::Balanced,
    };
    let exact = n <= EXACT_WILCOXON_MAX;
    let p_value = if exact {
        exact_p_value(&doubled, plus2.min(minus2))
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut ties = 0.0;
        let mut i = 0;
        let mut sorted = doubled.clone();
        sorted.sort_unstable();
        while i < sorted.len() {
            let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
            let t = j as f64;
            ties += t * t * t - t;
            i += j;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        if var <= 0.0 {
            1.0
        } else {
            let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
            let normal = Normal::standard();
            (2.0 * (1.0 - normal.cdf(z))).min(1.0)
        }
    };
    Ok(WilcoxonResult {
        statistic: w_plus.min(w_minus),
        w_plus,
        w_minus,
        n,
        p_value,
        exact,
        direction,
    })
}

/// `min(1, 2·P(W+ ≤ w))` under random signs on the given doubled ranks.
fn exact_p_value(doubled: &[u64], w2: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    let mut dist = vec![0.0f64; total as usize + 1];
    dist[0] = 1.0;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if dist[s] != 0.0 {
                dist[s + r] += dist[s];
            }
        }
        reach += r;
    }
    let all = 2f64.powi(doubled.len() as i32);
    let tail: f64 = dist[..=w2 as usize].iter().sum();
    (2.0 * tail / all).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi_square: f64,
    pub p_value: f64,
    /// Mean rank per method; rank 1 is the lowest score.
    pub mean_ranks: Vec<f64>,
    pub critical_difference: f64,
    /// Maximal sets of methods whose mean ranks all lie within the critical
    /// difference of each other, ordered by best member.
    pub groups: Vec<Vec<usize>>,
}

/// Nemenyi critical difference at the 0.05 level.
pub fn nemenyi_cd(methods: usize, datasets: usize) -> Result<f64> {
    if !(2..=NEMENYI_Q05.len() + 1).contains(&methods) || datasets == 0 {
        return Err(Error::InvalidParameter(format!(
            "critical difference tabulated for 2 to {} methods, got {methods}",
            NEMENYI_Q05.len() + 1
        )));
    }
    let k = methods as f64;
    Ok(NEMENYI_Q05[methods - 2] * (k * (k + 1.0) / (6.0 * datasets as f64)).sqrt())
}

/// Friedman test over `scores[method][dataset]` (lower is better), with the
/// Nemenyi post-hoc grouping.
pub fn friedman_nemenyi(scores: &[Vec<f64>]) -> Result<FriedmanResult> {
    let k = scores.len();
    if k < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 methods, got {k}")));
    }
    let n = scores[0].len();
    if scores.iter().any(|row| row.len() != n) {
        return Err(Error::Misaligned("methods cover different datasets".into()));
    }
    if n < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 datasets, got {n}")));
    }
    let mut sums = vec![0.0; k];
    for d in 0..n {
        let column: Vec<f64> = scores.iter().map(|row| row[d]).collect();
        for (s, r) in sums.iter_mut().zip(average_ranks(&column)) {
            *s += r;
        }
    }
    let mean_ranks: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let (kf, nf) = (k as f64, n as f64);
    let chi_square = (12.0 * nf / (kf * (kf + 1.0))
        * (mean_ranks.iter().map(|r| r * r).sum::<f64>() - kf * (kf + 1.0).powi(2) / 4.0))
        .max(0.0);
    let p_value = 1.0
        - ChiSquared::new(kf - 1.0)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .cdf(chi_square);
    let critical_difference = nemenyi_cd(k, n)?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| mean_ranks[a].total_cmp(&mean_ranks[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut last_end = 0;
    for start in 0..k {
        let mut end = start;
        while end + 1 < k && mean_ranks[order[end + 1]] - mean_ranks[order[start]] <= critical_difference {
            end += 1;
        }
        if end + 1 > last_end {
            groups.push(order[start..=end].to_vec());
            last_end = end + 1;
        }
    }
    Ok(FriedmanResult {
        chi_square,
        p_value,
        mean_ranks,
        critical_difference,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two-sided p by enumerating every sign assignment.
    fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
        let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
        let mags: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
        // rank = 1 + #smaller + (#equal - 1) / 2
        let ranks: Vec<f64> = mags
            .iter()
            .map(|m| {
                let below = mags.iter().filter(|x| *x < m).count() as f64;
                let equal = mags.iter().filter(|x| *x == m).count() as f64;
                1.0 + below + (equal - 1.0) / 2.0
            })
            .collect();
        let n = diffs.len();
        let mean = ranks.iter().sum::<f64>() / 2.0;
        let observed: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if (w - mean).abs() >= (observed - mean).abs() - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn identical_samples_are_rejected() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        assert!(matches!(wilcoxon_signed_rank(&a, &a), Err(Error::TooFewPairs { found: 0, .. })));
    }

    #[test]
    fn constant_shift_on_ten_pairs() {
        let b: Vec<f64> = (0..10).map(|i| i as f64 * 0.37).collect();
        let a: Vec<f64> = b.iter().map(|x| x + 1.0).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.direction, Direction::FirstGreater);
        // every difference ties: all ranks are 5.5, so only the two
        // all-same-sign assignments are as extreme
        assert!((r.p_value - 2.0 / 1024.0).abs() < 1e-15);
        assert!(r.p_value < 0.01);
    }

    #[test]
    fn distinct_shifts_on_ten_pairs() {
        let a: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let b = vec![0.0; 10];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!((r.p_value - 2.0 / 1024.0).abs() < 1e-15);
    }

    #[test]
    fn n_eight_matches_enumeration() {
        let a = [3.1, 2.0, 5.5, 4.4, 1.0, 6.2, 2.2, 7.0, 9.0];
        let b = [2.0, 2.5, 3.5, 4.4, 2.5, 3.0, 0.2, 6.0, 8.7];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.n, 8);
        assert!((r.p_value - brute_force_p(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn large_samples_use_the_normal_approximation() {
        let a: Vec<f64> = (0..40).map(|i| (i as f64 * 1.7).sin()).collect();
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.9).cos() * 0.5).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(!r.exact);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);
        // symmetric in argument order
        let s = wilcoxon_signed_rank(&b, &a).unwrap();
        assert!((r.p_value - s.p_value).abs() < 1e-15);
        assert_eq!(s.direction == Direction::FirstLess, r.direction == Direction::FirstGreater);
    }

    #[test]
    fn nemenyi_cd_four_methods() {
        let cd = nemenyi_cd(4, 34).unwrap();
        assert!((cd - 2.569 * (20.0f64 / 204.0).sqrt()).abs() < 1e-12);
        assert!((cd - 0.804).abs() < 1e-3);
    }

    #[test]
    fn friedman_identical_columns() {
        let scores = vec![vec![0.3; 12]; 4];
        let r = friedman_nemenyi(&scores).unwrap();
        assert!(r.mean_ranks.iter().all(|&m| m == 2.5));
        assert_eq!(r.chi_square, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.groups, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn friedman_dominant_method() {
        let scores: Vec<Vec<f64>> = (0..4)
            .map(|m| (0..34).map(|d| m as f64 + (d as f64 * 0.1).sin() * 0.01).collect())
            .collect();
        let r = friedman_nemenyi(&scores).unwrap();
        assert_eq!(r.mean_ranks, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(r.p_value < 1e-10);
        // consecutive ranks differ by 1 > CD 0.804
        assert_eq!(r.groups, vec![vec![0], vec![1], vec![2], vec![3]]);
        assert!(friedman_nemenyi(&scores[..2]).is_err());
        assert!(friedman_nemenyi(&[vec![1.0; 9], vec![2.0; 9], vec![3.0; 9]]).is_err());
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    proptest! {
        #[test]
        fn exact_p_matches_enumeration(
            pairs in prop::collection::vec((-3i32..=3, -3i32..=3), 6..=10),
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
            match wilcoxon_signed_rank(&a, &b) {
                Ok(r) => prop_assert!((r.p_value - brute_force_p(&a, &b)).abs() < 1e-9),
                Err(Error::TooFewPairs { .. }) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}

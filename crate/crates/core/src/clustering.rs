//! Lloyd's k-means with k-means++ seeding, and soft membership of a
//! (possibly incomplete) series to the fitted centroids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const SHIFT_TOLERANCE: f64 = 1e-6;

/// How distances to centroids are turned into membership probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipRule {
    /// `exp(-λ (d_k - min d))` normalized, with `λ = 1 / (mean d + 1e-12)`.
    #[default]
    ScaledSoftmin,
    /// All mass on the nearest centroid (lowest index on ties).
    Nearest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    pub seed: u64,
    #[serde(default)]
    pub rule: MembershipRule,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, &c[..point.len()]);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn inertia(data: &[Vec<f64>], centroids: &[Vec<f64>]) -> f64 {
    data.iter().map(|p| nearest(p, centroids).1).sum()
}

/// Fits `k` centroids to `data`.
///
/// Seeding draws the first centre uniformly and every following one with
/// probability proportional to the squared distance to the closest chosen
/// centre. Iterations stop after [`MAX_ITERATIONS`] or when no centroid
/// moves more than [`SHIFT_TOLERANCE`]. A cluster left empty is re-seeded
/// with the point farthest from its centroid.
pub fn kmeans_fit(data: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterModel> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if data.len() < k {
        return Err(Error::NotEnoughPoints {
            need: k,
            got: data.len(),
        });
    }
    let dim = data[0].len();
    if data.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidParameter("points have different lengths".into()));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(data, k, &mut rng);
    let mut assignment = vec![0usize; data.len()];
    let mut previous = f64::INFINITY;

    for _ in 0..MAX_ITERATIONS {
        for (slot, p) in assignment.iter_mut().zip(data) {
            *slot = nearest(p, &centroids).0;
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &c) in data.iter().zip(&assignment) {
            sizes[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut updated: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&sizes)
            .map(|(s, &n)| s.into_iter().map(|v| v / n.max(1) as f64).collect())
            .collect();
        for c in 0..k {
            if sizes[c] == 0 {
                let far = (0..data.len())
                    .max_by(|&a, &b| {
                        let da = sq_dist(&data[a], &updated[assignment[a]]);
                        let db = sq_dist(&data[b], &updated[assignment[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("non-empty data");
                updated[c] = data[far].clone();
                assignment[far] = c;
            }
        }

        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;

        let current = inertia(data, &centroids);
        debug_assert!(
            current <= previous + 1e-9 * previous.abs().max(1.0),
            "k-means inertia increased from {previous} to {current}"
        );
        previous = current;
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }

    Ok(ClusterModel {
        centroids,
        seed,
        rule: MembershipRule::default(),
    })
}

fn seed_plus_plus(data: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut chosen = vec![rng.random_range(0..data.len())];
    let mut closest: Vec<f64> = data.iter().map(|p| sq_dist(p, &data[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in closest.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total mass")
        } else {
            // every point coincides with a chosen centre
            (0..data.len())
                .find(|i| !chosen.contains(i))
                .expect("data.len() >= k")
        };
        chosen.push(next);
        for (c, p) in closest.iter_mut().zip(data) {
            *c = c.min(sq_dist(p, &data[next]));
        }
    }
    chosen.into_iter().map(|i| data[i].clone()).collect()
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Centroid length.
    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }

    pub fn with_rule(mut self, rule: MembershipRule) -> Self {
        self.rule = rule;
        self
    }

    /// Euclidean distance from `prefix` to the first `prefix.len()`
    /// coordinates of each centroid.
    pub fn prefix_distances(&self, prefix: &[f64]) -> Result<Vec<f64>> {
        if prefix.len() > self.dim() || prefix.is_empty() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: prefix.len(),
            });
        }
        Ok(self
            .centroids
            .iter()
            .map(|c| sq_dist(prefix, &c[..prefix.len()]).sqrt())
            .collect())
    }

    /// Index of the nearest centroid under the prefix distance.
    pub fn assign(&self, prefix: &[f64]) -> Result<usize> {
        let d = self.prefix_distances(prefix)?;
        Ok(argmin(&d))
    }

    /// Probability of belonging to each cluster.
    pub fn membership(&self, prefix: &[f64]) -> Result<Vec<f64>> {
        let d = self.prefix_distances(prefix)?;
        Ok(match self.rule {
            MembershipRule::ScaledSoftmin => {
                let min = d.iter().copied().fold(f64::INFINITY, f64::min);
                let mean = d.iter().sum::<f64>() / d.len() as f64;
                let sharpness = 1.0 / (mean + 1e-12);
                let weights: Vec<f64> = d.iter().map(|dk| (-sharpness * (dk - min)).exp()).collect();
                let total: f64 = weights.iter().sum();
                weights.into_iter().map(|w| w / total).collect()
            }
            MembershipRule::Nearest => {
                let mut out = vec![0.0; d.len()];
                out[argmin(&d)] = 1.0;
                out
            }
        })
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

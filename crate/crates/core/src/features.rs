//! Fixed statistical/temporal summary of a series prefix.

use crate::error::{Error, Result};

/// Number of features produced by [`extract_features`].
pub const FEATURE_COUNT: usize = 12;

/// Feature names in output order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "mean",
    "std",
    "min",
    "max",
    "first",
    "last",
    "slope",
    "mean_abs_change",
    "energy",
    "autocorr_lag1",
    "mean_crossing_rate",
    "range",
];

pub type FeatureVector = [f64; FEATURE_COUNT];

/// Summarizes a prefix into [`FEATURE_COUNT`] finite values.
///
/// `std` is the population standard deviation. `slope` is the least-squares
/// slope against the sample index. The lag-1 autocorrelation is 0 for prefixes
/// shorter than 3 or with zero variance; the mean-crossing rate (sign changes
/// of `x - mean` between neighbours, divided by `t - 1`) is 0 for `t = 1`.
pub fn extract_features(prefix: &[f64]) -> Result<FeatureVector> {
    let t = prefix.len();
    if t == 0 {
        return Err(Error::InvalidParameter("empty prefix".into()));
    }
    if prefix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = t as f64;
    let mean = prefix.iter().sum::<f64>() / n;
    let centered_ss: f64 = prefix.iter().map(|v| (v - mean).powi(2)).sum();
    let std = (centered_ss / n).sqrt();
    let min = prefix.iter().copied().fold(f64::INFINITY, f64::min);
    let max = prefix.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let slope = if t < 2 {
        0.0
    } else {
        let idx_mean = (n - 1.0) / 2.0;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (i, v) in prefix.iter().enumerate() {
            let dx = i as f64 - idx_mean;
            sxy += dx * (v - mean);
            sxx += dx * dx;
        }
        sxy / sxx
    };

    let mean_abs_change = if t < 2 {
        0.0
    } else {
        prefix.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (n - 1.0)
    };

    let energy = prefix.iter().map(|v| v * v).sum::<f64>() / n;

    let autocorr = if t < 3 || centered_ss == 0.0 {
        0.0
    } else {
        prefix
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / centered_ss
    };

    let crossing_rate = if t < 2 {
        0.0
    } else {
        let crossings = prefix
            .windows(2)
            .filter(|w| (w[0] - mean) * (w[1] - mean) < 0.0)
            .count();
        crossings as f64 / (n - 1.0)
    };

    Ok([
        mean,
        std,
        min,
        max,
        prefix[0],
        prefix[t - 1],
        slope,
        mean_abs_change,
        energy,
        autocorr,
        crossing_rate,
        max - min,
    ])
}

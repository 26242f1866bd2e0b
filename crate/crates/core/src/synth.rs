//! Synthetic binary datasets whose classes separate only after an onset
//! time, for exercising triggers under a known information structure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset, LabeledSeries};
use crate::error::{Error, Result};

/// Series are white noise until `onset · length`; from then on class 1 is
/// shifted by `+shift` and class 0 by `-shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub series: usize,
    pub length: usize,
    /// Fraction of the length before which the classes are identical.
    pub onset: f64,
    pub shift: f64,
    pub noise: f64,
    /// Fraction of series in class 1.
    pub positive_rate: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            series: 200,
            length: 50,
            onset: 0.5,
            shift: 1.5,
            noise: 1.0,
            positive_rate: 0.5,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// First index (0-based) carrying class information.
    pub fn onset_index(&self) -> usize {
        ((self.onset * self.length as f64).round() as usize).min(self.length)
    }
}

pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    if spec.series < 2 || spec.length < 2 {
        return Err(Error::InvalidParameter("need at least 2 series of length 2".into()));
    }
    if !(0.0..=1.0).contains(&spec.onset) || !(0.0..=1.0).contains(&spec.positive_rate) {
        return Err(Error::InvalidParameter("onset and positive rate must lie in [0, 1]".into()));
    }
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let positives = (spec.positive_rate * spec.series as f64).round() as usize;
    let onset = spec.onset_index();
    let series = (0..spec.series)
        .map(|i| {
            // interleave the classes so any prefix of the file is mixed
            let label = ClassId::from(i * positives / spec.series != (i + 1) * positives / spec.series);
            let sign = if label == 1 { 1.0 } else { -1.0 };
            let values = (0..spec.length)
                .map(|t| {
                    let signal = if t >= onset { sign * spec.shift } else { 0.0 };
                    signal + noise.sample(&mut rng)
                })
                .collect();
            LabeledSeries::new(values, label)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(series)
}

//! Early classification of time series with cost-based, non-myopic triggers.
//!
//! A chain of classifiers scores ever-longer prefixes of a series. A trigger
//! model, trained on held-out series, estimates for every future timestamp
//! the expected misclassification cost plus the cost of waiting, and stops
//! as soon as deciding now is cheapest.

pub mod baselines;
pub mod bench;
pub mod classifier;
pub mod clustering;
pub mod confidence;
pub mod config;
pub mod cost;
pub mod dataset;
pub mod document;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod report;
pub mod stats;
pub mod synth;
pub mod trigger;

pub use classifier::{predict, ClassifierChain, LogisticConfig, ScoreChain, ScoredSet};
pub use config::{Method, RunConfig};
pub use cost::CostModel;
pub use dataset::{ClassId, Dataset, LabeledSeries, TimestampGrid};
pub use document::EarlyClassifier;
pub use error::{Error, Result};
pub use trigger::{Decision, Horizon, TriggerModel, Variant};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cost.md")]
    mod cost {}
    #[doc = include_str!("../../../book/src/triggers.md")]
    mod triggers {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

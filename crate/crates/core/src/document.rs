//! Versioned JSON document bundling a classifier chain with a trained
//! trigger, so a deployed model can decide on raw series.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierChain, ScoreChain};
use crate::dataset::ClassId;
use crate::error::{Error, Result};
use crate::trigger::{Decision, TriggerModel};

pub const MODEL_FORMAT: &str = "economy-early-classifier";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyClassifier {
    pub format: String,
    pub version: u32,
    /// Original class id mapped to label 1; every other class is label 0.
    pub positive_class: ClassId,
    pub chain: ClassifierChain,
    pub trigger: TriggerModel,
}

impl EarlyClassifier {
    pub fn new(positive_class: ClassId, chain: ClassifierChain, trigger: TriggerModel) -> Result<Self> {
        let doc = Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            positive_class,
            chain,
            trigger,
        };
        doc.validate()?;
        Ok(doc)
    }

    fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::MalformedModel(format!("unknown format {:?}", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::MalformedModel(format!(
                "unsupported version {} (expected {MODEL_VERSION})",
                self.version
            )));
        }
        ClassifierChain::from_models(self.chain.grid().clone(), self.chain.models().to_vec())?;
        if self.chain.grid() != &self.trigger.grid {
            return Err(Error::MalformedModel("chain and trigger use different grids".into()));
        }
        self.trigger.validate()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Runs the trigger on a full-length series, scoring prefixes on the fly.
    pub fn decide(&self, values: &[f64]) -> Result<Decision> {
        self.trigger.decide(values, &self.chain)
    }

    /// Label 1 for the positive class, 0 otherwise.
    pub fn binary_label(&self, original: ClassId) -> ClassId {
        ClassId::from(original == self.positive_class)
    }
}

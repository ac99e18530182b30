//! The black-box model interface, built-in surrogate models, and the
//! line-delimited JSON protocol for external ones.

mod builtin;
mod external;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lang::LangError;

pub use builtin::{EdgeRule, EdgeRuleConfig, LinearBag, LinearBagConfig, Rule, RuleConfig, RulePresence, TokenEdgeRule};
pub use external::{serve, ExternalModel, DEFAULT_TIMEOUT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<BTreeMap<String, f64>>,
}

impl Prediction {
    pub fn certain(label: &str) -> Prediction {
        Prediction { label: label.to_string(), probs: Some(BTreeMap::from([(label.to_string(), 1.0)])) }
    }

    pub fn prob(&self, label: &str) -> Option<f64> {
        self.probs.as_ref().map(|p| p.get(label).copied().unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    RulePresence,
    LinearBag,
    EdgeRule,
    External,
    /// A hand-written implementation of [`Model`].
    Custom,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model input does not parse: {0}")]
    ParseFailed(#[from] LangError),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("model process unreachable: {0}")]
    Unreachable(String),
    #[error("model reported an error: {0}")]
    Remote(String),
    #[error("bad model config: {0}")]
    Config(String),
}

pub trait Model: Send + Sync {
    fn id(&self) -> &str;
    fn kind(&self) -> ModelKind;
    /// Whether `predict` may be called from several threads at once.
    fn concurrency_safe(&self) -> bool;
    fn predict(&self, source: &str) -> Result<Prediction, ModelError>;

    /// Prediction with every semantic edge stripped from the input graph.
    /// Models that do not consume edges answer as `predict` does.
    fn predict_without_edges(&self, source: &str) -> Result<Prediction, ModelError> {
        self.predict(source)
    }
}

pub type ModelHandle = Arc<dyn Model>;

/// A model config document, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ModelSpec {
    RulePresence(RuleConfig),
    LinearBag(LinearBagConfig),
    EdgeRule(EdgeRuleConfig),
}

impl ModelSpec {
    /// Stable id: the config's own `id`, else a digest of the document.
    pub fn id(&self) -> String {
        let explicit = match self {
            ModelSpec::RulePresence(c) => c.id.clone(),
            ModelSpec::LinearBag(c) => c.id.clone(),
            ModelSpec::EdgeRule(c) => c.id.clone(),
        };
        explicit.unwrap_or_else(|| {
            let json = serde_json::to_string(self).expect("config serializes");
            let prefix = match self {
                ModelSpec::RulePresence(_) => "rule-presence",
                ModelSpec::LinearBag(_) => "linear-bag",
                ModelSpec::EdgeRule(_) => "edge-rule",
            };
            format!("{prefix}-{}", &hex::encode(Sha256::digest(json.as_bytes()))[..12])
        })
    }

    pub fn build(&self) -> Result<ModelHandle, ModelError> {
        let id = self.id();
        Ok(match self {
            ModelSpec::RulePresence(c) => Arc::new(RulePresence::new(id, c.clone())?),
            ModelSpec::LinearBag(c) => Arc::new(LinearBag::new(id, c.clone())?),
            ModelSpec::EdgeRule(c) => Arc::new(EdgeRule::new(id, c.clone())?),
        })
    }

    pub fn from_json(text: &str) -> Result<ModelSpec, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Config(e.to_string()))
    }
}

/// `exec:<command>` spawns an external model; anything else is a config path.
pub fn load_model(arg: &str) -> Result<ModelHandle, ModelError> {
    if let Some(cmd) = arg.strip_prefix("exec:") {
        return Ok(Arc::new(ExternalModel::spawn(cmd, DEFAULT_TIMEOUT)?));
    }
    let text = std::fs::read_to_string(Path::new(arg)).map_err(|e| ModelError::Config(format!("{arg}: {e}")))?;
    ModelSpec::from_json(&text)?.build()
}

/// Softmax over `scores / temperature`, label order preserved.
pub(crate) fn softmax(scores: &[(String, f64)], temperature: f64) -> BTreeMap<String, f64> {
    let max = scores.iter().map(|(_, s)| s / temperature).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|(_, s)| (s / temperature - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    scores.iter().zip(exps).map(|((l, _), e)| (l.clone(), e / total)).collect()
}

/// Highest probability wins; ties go to the lexicographically smallest label.
pub(crate) fn argmax(probs: &BTreeMap<String, f64>) -> String {
    let mut best: Option<(&String, f64)> = None;
    for (l, &p) in probs {
        if best.map_or(true, |(_, bp)| p > bp) {
            best = Some((l, p));
        }
    }
    best.map(|(l, _)| l.clone()).unwrap_or_default()
}

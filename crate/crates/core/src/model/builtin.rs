use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{argmax, softmax, Model, ModelError, ModelKind, Prediction};
use crate::lang::{augment, parse_tokens, tokenize, EdgeKind, Token, TokenKind};
use crate::OOV;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub all_of: BTreeSet<String>,
    #[serde(default)]
    pub none_of: BTreeSet<String>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub rules: Vec<Rule>,
    pub default_label: String,
}

impl RuleConfig {
    /// True when no rule can be switched off by adding tokens.
    pub fn is_monotone(&self) -> bool {
        self.rules.iter().all(|r| r.none_of.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBagConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub labels: Vec<String>,
    /// token text -> label -> weight
    #[serde(default)]
    pub weights: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub bias: BTreeMap<String, f64>,
    #[serde(default = "one")]
    pub temperature: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEdgeRule {
    pub all_of_tokens: BTreeSet<String>,
    #[serde(default)]
    pub all_of_edge_kinds: BTreeSet<EdgeKind>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRuleConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub rules: Vec<TokenEdgeRule>,
    pub default_label: String,
}

fn check_label(label: &str) -> Result<(), ModelError> {
    if label.is_empty() {
        return Err(ModelError::Config("empty label".into()));
    }
    Ok(())
}

fn check_tokens<'a>(tokens: impl IntoIterator<Item = &'a String>) -> Result<(), ModelError> {
    for t in tokens {
        if t == OOV {
            return Err(ModelError::Config(format!("`{OOV}` is reserved and cannot appear in a rule")));
        }
    }
    Ok(())
}

/// Parse (to reject malformed inputs) and return the tokens.
fn read(source: &str) -> Result<Vec<Token>, ModelError> {
    let tokens = tokenize(source)?;
    parse_tokens(&tokens)?;
    Ok(tokens)
}

fn words(tokens: &[Token]) -> BTreeSet<&str> {
    tokens.iter().filter(|t| t.is_word()).map(|t| t.text.as_str()).collect()
}

pub struct RulePresence {
    id: String,
    config: RuleConfig,
}

impl RulePresence {
    pub fn new(id: impl Into<String>, config: RuleConfig) -> Result<Self, ModelError> {
        check_label(&config.default_label)?;
        for r in &config.rules {
            check_label(&r.label)?;
            check_tokens(r.all_of.iter().chain(&r.none_of))?;
        }
        Ok(RulePresence { id: id.into(), config })
    }

    pub fn config(&self) -> &RuleConfig {
        &self.config
    }
}

impl Model for RulePresence {
    fn id(&self) -> &str {
        &self.id
    }
    fn kind(&self) -> ModelKind {
        ModelKind::RulePresence
    }
    fn concurrency_safe(&self) -> bool {
        true
    }
    fn predict(&self, source: &str) -> Result<Prediction, ModelError> {
        let tokens = read(source)?;
        let present = words(&tokens);
        let fired = self.config.rules.iter().find(|r| {
            r.all_of.iter().all(|t| present.contains(t.as_str()))
                && !r.none_of.iter().any(|t| present.contains(t.as_str()))
        });
        Ok(Prediction::certain(fired.map_or(&self.config.default_label, |r| &r.label)))
    }
}

pub struct LinearBag {
    id: String,
    config: LinearBagConfig,
}

impl LinearBag {
    pub fn new(id: impl Into<String>, config: LinearBagConfig) -> Result<Self, ModelError> {
        if config.labels.is_empty() {
            return Err(ModelError::Config("no labels".into()));
        }
        if !(config.temperature > 0.0) {
            return Err(ModelError::Config("temperature must be positive".into()));
        }
        config.labels.iter().try_for_each(|l| check_label(l))?;
        check_tokens(config.weights.keys())?;
        let known = |l: &String| config.labels.contains(l);
        if !config.weights.values().flat_map(|m| m.keys()).chain(config.bias.keys()).all(known) {
            return Err(ModelError::Config("weight or bias for an undeclared label".into()));
        }
        Ok(LinearBag { id: id.into(), config })
    }

    pub fn scores(&self, tokens: &[Token]) -> Vec<(String, f64)> {
        let mut scores: Vec<(String, f64)> = self
            .config
            .labels
            .iter()
            .map(|l| (l.clone(), self.config.bias.get(l).copied().unwrap_or(0.0)))
            .collect();
        for t in tokens.iter().filter(|t| t.kind != TokenKind::Punct) {
            if let Some(w) = self.config.weights.get(&t.text) {
                for (l, s) in scores.iter_mut() {
                    *s += w.get(l).copied().unwrap_or(0.0);
                }
            }
        }
        scores
    }
}

impl Model for LinearBag {
    fn id(&self) -> &str {
        &self.id
    }
    fn kind(&self) -> ModelKind {
        ModelKind::LinearBag
    }
    fn concurrency_safe(&self) -> bool {
        true
    }
    fn predict(&self, source: &str) -> Result<Prediction, ModelError> {
        let tokens = read(source)?;
        let probs = softmax(&self.scores(&tokens), self.config.temperature);
        Ok(Prediction { label: argmax(&probs), probs: Some(probs) })
    }
}

pub struct EdgeRule {
    id: String,
    config: EdgeRuleConfig,
}

impl EdgeRule {
    pub fn new(id: impl Into<String>, config: EdgeRuleConfig) -> Result<Self, ModelError> {
        check_label(&config.default_label)?;
        for r in &config.rules {
            check_label(&r.label)?;
            check_tokens(&r.all_of_tokens)?;
        }
        Ok(EdgeRule { id: id.into(), config })
    }

    fn decide(&self, source: &str, with_edges: bool) -> Result<Prediction, ModelError> {
        let tokens = tokenize(source)?;
        let ast = parse_tokens(&tokens)?;
        let present = words(&tokens);
        let kinds = if with_edges { augment(&ast).kinds() } else { BTreeSet::new() };
        let fired = self.config.rules.iter().find(|r| {
            r.all_of_tokens.iter().all(|t| present.contains(t.as_str()))
                && r.all_of_edge_kinds.iter().all(|k| kinds.contains(k))
        });
        Ok(Prediction::certain(fired.map_or(&self.config.default_label, |r| &r.label)))
    }
}

impl Model for EdgeRule {
    fn id(&self) -> &str {
        &self.id
    }
    fn kind(&self) -> ModelKind {
        ModelKind::EdgeRule
    }
    fn concurrency_safe(&self) -> bool {
        true
    }
    fn predict(&self, source: &str) -> Result<Prediction, ModelError> {
        self.decide(source, true)
    }
    fn predict_without_edges(&self, source: &str) -> Result<Prediction, ModelError> {
        self.decide(source, false)
    }
}

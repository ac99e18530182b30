//! What kind of wheat a model relies on, and whether an attribution method
//! would have pointed at it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{embed, join, lexemes, serialize, tokenize, NodeKind, Program, TokenKind};
use crate::model::{Model, ModelError};
use crate::mutate::Wheat;
use crate::verify::Verifier;
use crate::OOV;

pub const DEFAULT_GRID: [u32; 5] = [10, 30, 50, 70, 90];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WheatClass {
    Lexical,
    Syntactic,
    Semantic,
}

/// Semantic when the wheat stops verifying once the model is denied the
/// semantic edges; otherwise Lexical when every statement is a bare name;
/// otherwise Syntactic.
pub fn classify_wheat(verifier: &Verifier, wheat: &Wheat) -> Result<WheatClass> {
    let model = verifier.model;
    let label = verifier.label();
    let suff = model.predict_without_edges(&serialize(&verifier.suff_program(&wheat.ast)))?;
    let holds = suff.label == label && {
        let rest = verifier.nec_program(&wheat.ast)?;
        model.predict_without_edges(&serialize(&rest))?.label != label
    };
    if !holds {
        return Ok(WheatClass::Semantic);
    }
    let lexical = wheat.ast.body().children.iter().all(|s| {
        s.kind == NodeKind::ExprStmt && s.children.first().is_some_and(|e| e.kind == NodeKind::Identifier)
    });
    Ok(if lexical { WheatClass::Lexical } else { WheatClass::Syntactic })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    Occlusion,
    External,
}

/// One score per token of the whole program, header included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionScores {
    pub scores: Vec<f64>,
    pub source: ScoreSource,
}

impl AttributionScores {
    /// A JSON array of numbers, index-aligned with the program's tokens.
    pub fn from_json(text: &str, program: &Program) -> Result<AttributionScores, String> {
        let scores: Vec<f64> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if scores.len() != program.tokens.len() {
            return Err(format!("{} scores for {} tokens", scores.len(), program.tokens.len()));
        }
        Ok(AttributionScores { scores, source: ScoreSource::External })
    }
}

/// How much the model's confidence in its label drops when token `i`
/// becomes `oov`. Variants that no longer parse score 0: the model cannot
/// be asked about them.
pub fn occlusion_attribution(program: &Program, model: &dyn Model) -> Result<AttributionScores> {
    let original = model.predict(&program.source)?;
    let no_probs = || Error::NoProbabilities { model: model.id().to_string() };
    let base = original.prob(&original.label).ok_or_else(no_probs)?;
    let mut scores = Vec::with_capacity(program.tokens.len());
    for i in 0..program.tokens.len() {
        let mut tokens = program.tokens.clone();
        tokens[i].text = OOV.to_string();
        tokens[i].kind = TokenKind::Identifier;
        let p = match model.predict(&join(&tokens)) {
            Ok(p) => p,
            Err(ModelError::ParseFailed(_)) => {
                scores.push(0.0);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        scores.push(base - p.prob(&original.label).ok_or_else(no_probs)?);
    }
    Ok(AttributionScores { scores, source: ScoreSource::Occlusion })
}

/// Positions in the program's tokens of the wheat's lexemes, by leftmost
/// oov-aware embedding. Punctuation is left out: repair may have placed it.
pub fn wheat_positions(wheat: &Wheat, program: &Program) -> Option<Vec<usize>> {
    embed(&lexemes(&wheat.tokens), &program.tokens)
}

/// Convenience for sources that are not a [`Wheat`] yet.
pub fn source_positions(statements: &str, program: &Program) -> Result<Option<Vec<usize>>> {
    Ok(embed(&lexemes(&tokenize(statements)?), &program.tokens))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub top_pct: u32,
    pub covered: bool,
}

/// The `ceil(pct * n / 100)` highest-scoring positions, ties to the lower
/// position.
pub fn top_positions(scores: &[f64], top_pct: u32) -> Vec<usize> {
    let n = scores.len();
    let take = (top_pct as usize * n).div_ceil(100).min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(take);
    order
}

pub fn coverage(scores: &AttributionScores, wheat_positions: &[usize], top_pct: u32) -> CoverageResult {
    let top = top_positions(&scores.scores, top_pct);
    CoverageResult { top_pct, covered: wheat_positions.iter().all(|p| top.contains(p)) }
}

/// Fraction of programs fully covered at each grid point.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CoverageTable {
    pub programs: usize,
    pub covered: BTreeMap<u32, usize>,
}

impl CoverageTable {
    pub fn add(&mut self, results: &[CoverageResult]) {
        self.programs += 1;
        for r in results {
            *self.covered.entry(r.top_pct).or_default() += usize::from(r.covered);
        }
    }

    pub fn fraction(&self, top_pct: u32) -> f64 {
        if self.programs == 0 {
            return 0.0;
        }
        self.covered.get(&top_pct).copied().unwrap_or(0) as f64 / self.programs as f64
    }

    /// Whether coverage never drops as the budget grows.
    pub fn is_monotone(&self) -> bool {
        let v: Vec<usize> = self.covered.values().copied().collect();
        v.windows(2).all(|w| w[0] <= w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::edge_rule;
    use crate::lang::RUNNING_EXAMPLE;
    use crate::model::{LinearBag, LinearBagConfig, Rule, RuleConfig, RulePresence};
    use crate::mutate::{extract_wheat_with, ExtractOptions};
    use crate::verify::{HeaderMode, QueryLedger};
    use std::collections::BTreeSet;

    fn extract(model: &dyn Model, src: &str) -> (Program, Wheat, WheatClass) {
        let p = Program::parse(src).unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(model, &p, &ledger, HeaderMode::MaskName).unwrap();
        let w = extract_wheat_with(&v, &ExtractOptions::default()).unwrap();
        let class = classify_wheat(&v, &w).unwrap();
        (p.clone(), w, class)
    }

    fn rule(word: &str) -> RulePresence {
        let r = Rule { all_of: BTreeSet::from([word.to_string()]), none_of: BTreeSet::new(), label: "L".into() };
        RulePresence::new("r", RuleConfig { id: None, rules: vec![r], default_label: "misc".into() }).unwrap()
    }

    #[test]
    fn bare_name_is_lexical() {
        let (_, w, class) = extract(&rule("tasks"), "void f(){ int n = tasks; g(); }");
        assert_eq!(w.source(), "tasks;");
        assert_eq!(class, WheatClass::Lexical);
    }

    #[test]
    fn call_is_syntactic() {
        let (_, w, class) = extract(&rule("add"), "void f(){ x = y; items.add(x); }");
        assert_eq!(w.source(), "add();");
        assert_eq!(class, WheatClass::Syntactic);
    }

    #[test]
    fn edge_dependent_wheat_is_semantic() {
        let m = edge_rule().build().unwrap();
        let (_, w, class) = extract(m.as_ref(), "int f(){ total = a + b; log(c); return total; }");
        assert!(w.source().contains("total"), "{}", w.source());
        assert_eq!(class, WheatClass::Semantic);
    }

    fn bag() -> LinearBag {
        let cfg = LinearBagConfig {
            id: None,
            labels: vec!["A".into(), "B".into()],
            weights: BTreeMap::from([("a".into(), BTreeMap::from([("A".into(), 2.0)]))]),
            bias: BTreeMap::from([("B".into(), 1.0)]),
            temperature: 1.0,
        };
        LinearBag::new("bag", cfg).unwrap()
    }

    #[test]
    fn occlusion_by_hand() {
        let p = Program::parse("void f(){ a; z; }").unwrap();
        let s = occlusion_attribution(&p, &bag()).unwrap();
        assert_eq!(s.scores.len(), p.tokens.len());
        // with `a`: softmax(2, 1) for A; without: softmax(0, 1)
        let with = 1.0 / (1.0 + (-1.0f64).exp());
        let without = 1.0 / (1.0 + 1.0f64.exp());
        let a = p.tokens.iter().position(|t| t.text == "a").unwrap();
        let z = p.tokens.iter().position(|t| t.text == "z").unwrap();
        assert!((s.scores[a] - (with - without)).abs() < 1e-12);
        assert!(s.scores[a] > 0.0);
        assert_eq!(s.scores[z], 0.0);
        // `{` cannot become a name
        assert_eq!(s.scores[p.tokens.iter().position(|t| t.text == "{").unwrap()], 0.0);
    }

    #[test]
    fn ten_token_instance() {
        // wheat at the 3rd and 4th highest scores
        let scores = AttributionScores {
            scores: vec![0.9, 0.1, 0.7, 0.0, 0.5, 0.2, 0.3, 0.8, 0.05, 0.15],
            source: ScoreSource::External,
        };
        let wheat = [2, 4];
        assert_eq!(top_positions(&scores.scores, 30), [0, 7, 2]);
        assert!(!coverage(&scores, &wheat, 30).covered);
        assert!(coverage(&scores, &wheat, 40).covered);
        assert!(coverage(&scores, &wheat, 100).covered);
        assert!(!coverage(&scores, &wheat, 10).covered);
    }

    #[test]
    fn ties_go_to_the_earlier_position() {
        assert_eq!(top_positions(&[1.0, 2.0, 1.0, 1.0], 50), [1, 0]);
    }

    #[test]
    fn wheat_lexemes_locate_in_the_program() {
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let pos = source_positions("mItems.add();", &p).unwrap().unwrap();
        assert_eq!(pos.len(), 2);
        assert_eq!(p.tokens[pos[0]].text, "mItems");
        assert_eq!(p.tokens[pos[1]].text, "add");
    }

    #[test]
    fn external_scores_must_align() {
        let p = Program::parse("void f(){ a; }").unwrap();
        assert!(AttributionScores::from_json("[1, 2]", &p).is_err());
        let ok = format!("[{}]", vec!["0.5"; p.tokens.len()].join(","));
        assert_eq!(AttributionScores::from_json(&ok, &p).unwrap().scores.len(), p.tokens.len());
    }
}

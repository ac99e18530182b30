//! The sufficient/necessary check every search step runs, and the query
//! ledger that caches and counts model calls.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{
    is_constituent, lexemes, parse_statements, serialize, statement_tokens, subtract, Ast, Node, NodeId, Program, Token,
};
use crate::model::{Model, ModelError, Prediction};

/// Stands in for the method name when the header is masked.
pub const MASKED_NAME: &str = "METHOD_NAME";

/// How a candidate body is wrapped before the sufficiency query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeaderMode {
    /// Original header, method name replaced by [`MASKED_NAME`]. Needed when
    /// the label is the name itself.
    #[default]
    MaskName,
    KeepHeader,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub sufficient: bool,
    /// False when sufficiency already failed and the check was skipped.
    pub necessary: bool,
    pub suff_prediction: Prediction,
    pub nec_prediction: Option<Prediction>,
    pub queries_used: u64,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.sufficient && self.necessary
    }
}

/// Counts model calls and caches predictions by exact source text.
///
/// Also remembers every distinct program it was asked about, in first-visit
/// order; that list is the query corpus of an extraction.
pub struct QueryLedger {
    total: AtomicU64,
    cache: Option<Mutex<HashMap<(String, String), Prediction>>>,
    visited: Mutex<(HashSet<String>, Vec<String>)>,
}

impl Default for QueryLedger {
    fn default() -> Self {
        QueryLedger::new()
    }
}

impl QueryLedger {
    pub fn new() -> Self {
        QueryLedger { total: AtomicU64::new(0), cache: Some(Mutex::default()), visited: Mutex::default() }
    }

    /// Every call reaches the model.
    pub fn uncached() -> Self {
        QueryLedger { cache: None, ..QueryLedger::new() }
    }

    pub fn predict(&self, model: &dyn Model, source: &str) -> Result<Prediction, ModelError> {
        {
            let mut v = self.visited.lock().unwrap_or_else(|e| e.into_inner());
            if v.0.insert(source.to_string()) {
                v.1.push(source.to_string());
            }
        }
        let key = (model.id().to_string(), source.to_string());
        if let Some(cache) = &self.cache {
            if let Some(p) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
                return Ok(p.clone());
            }
        }
        self.total.fetch_add(1, Ordering::SeqCst);
        let p = model.predict(source)?;
        if let Some(cache) = &self.cache {
            cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, p.clone());
        }
        Ok(p)
    }

    /// Model calls made so far (cache misses).
    pub fn total_queries(&self) -> u64 {
        self.total.load(Ordering::SeqCst)
    }

    pub fn visited(&self) -> Vec<String> {
        self.visited.lock().unwrap_or_else(|e| e.into_inner()).1.clone()
    }
}

/// A candidate: the original header around `statements`. Ids are kept.
pub fn candidate(original: &Program, statements: Vec<Node>) -> Ast {
    original.ast.with_body(statements, original.ast.body().id)
}

/// A candidate parsed from statement source, with fresh ids that do not
/// collide with the original's.
pub fn candidate_from_source(original: &Program, statements: &str) -> Result<Ast> {
    let mut stmts = parse_statements(statements)?;
    let mut next: NodeId = original.ast.next_id();
    for s in &mut stmts {
        s.renumber(&mut next);
    }
    Ok(candidate(original, stmts))
}

/// Binds a model, an original program, and its label for repeated checks.
pub struct Verifier<'a> {
    pub model: &'a dyn Model,
    pub original: &'a Program,
    pub ledger: &'a QueryLedger,
    pub header: HeaderMode,
    label: String,
    /// Lexemes of the original body.
    original_body: Vec<Token>,
}

impl<'a> Verifier<'a> {
    pub fn new(model: &'a dyn Model, original: &'a Program, ledger: &'a QueryLedger, header: HeaderMode) -> Result<Self> {
        let label = ledger.predict(model, &original.source)?.label;
        Ok(Verifier { model, original, ledger, header, label, original_body: lexemes(&original.body_tokens()) })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The program queried for sufficiency.
    pub fn suff_program(&self, candidate: &Ast) -> Ast {
        match self.header {
            HeaderMode::MaskName => candidate.with_name(MASKED_NAME),
            HeaderMode::KeepHeader => candidate.clone(),
        }
    }

    /// The program queried for necessity: original minus candidate.
    pub fn nec_program(&self, candidate: &Ast) -> Result<Ast> {
        Ok(subtract(&self.original.ast, candidate)?)
    }

    /// Judged on lexemes: repair may introduce punctuation (a `;` after a
    /// hoisted expression) that the original never had in that order.
    pub fn check_constituent(&self, candidate: &Ast) -> Result<()> {
        let tokens = statement_tokens(&candidate.body().children);
        if is_constituent(&lexemes(&tokens), &self.original_body) {
            Ok(())
        } else {
            Err(Error::ConstituentViolation { candidate: crate::lang::join(&tokens) })
        }
    }

    pub fn sufficient(&self, candidate: &Ast) -> Result<(bool, Prediction)> {
        self.check_constituent(candidate)?;
        let p = self.ledger.predict(self.model, &serialize(&self.suff_program(candidate)))?;
        Ok((p.label == self.label, p))
    }

    pub fn necessary(&self, candidate: &Ast) -> Result<(bool, Prediction)> {
        self.check_constituent(candidate)?;
        let p = self.ledger.predict(self.model, &serialize(&self.nec_program(candidate)?))?;
        Ok((p.label != self.label, p))
    }

    /// Both checks; necessity is skipped once sufficiency fails.
    pub fn verify(&self, candidate: &Ast) -> Result<Verdict> {
        let before = self.ledger.total_queries();
        let (sufficient, suff_prediction) = self.sufficient(candidate)?;
        let (necessary, nec_prediction) = if sufficient {
            let (n, p) = self.necessary(candidate)?;
            (n, Some(p))
        } else {
            (false, None)
        };
        let queries_used = self.ledger.total_queries() - before;
        Ok(Verdict { sufficient, necessary, suff_prediction, nec_prediction, queries_used })
    }

    /// `verify`, with candidates that cannot be checked counted as failing.
    pub fn accepts(&self, candidate: &Ast) -> Result<bool> {
        match self.verify(candidate) {
            Ok(v) => Ok(v.holds()),
            Err(e) if e.is_rejection() => Ok(false),
            Err(e) => Err(e),
        }
    }
}

pub fn check_sufficient(
    model: &dyn Model,
    candidate: &Ast,
    original: &Program,
    ledger: &QueryLedger,
    header: HeaderMode,
) -> Result<bool> {
    Ok(Verifier::new(model, original, ledger, header)?.sufficient(candidate)?.0)
}

pub fn check_necessary(model: &dyn Model, candidate: &Ast, original: &Program, ledger: &QueryLedger) -> Result<bool> {
    Ok(Verifier::new(model, original, ledger, HeaderMode::default())?.necessary(candidate)?.0)
}

pub fn verify_wheat(
    model: &dyn Model,
    candidate: &Ast,
    original: &Program,
    ledger: &QueryLedger,
    header: HeaderMode,
) -> Result<Verdict> {
    Verifier::new(model, original, ledger, header)?.verify(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::RUNNING_EXAMPLE;
    use crate::model::{Rule, RuleConfig, RulePresence};
    use std::collections::BTreeSet;

    fn add_model() -> RulePresence {
        let rule = Rule { all_of: BTreeSet::from(["add".into()]), none_of: BTreeSet::new(), label: "addItem".into() };
        RulePresence::new("add", RuleConfig { id: None, rules: vec![rule], default_label: "misc".into() }).unwrap()
    }

    fn setup() -> (RulePresence, Program) {
        (add_model(), Program::parse(RUNNING_EXAMPLE).unwrap())
    }

    #[test]
    fn identity_candidate_is_sufficient() {
        let (m, p) = setup();
        let ledger = QueryLedger::new();
        let c = candidate(&p, p.ast.body().children.clone());
        assert!(check_sufficient(&m, &c, &p, &ledger, HeaderMode::MaskName).unwrap());
    }

    #[test]
    fn call_fragment_satisfies_both() {
        let (m, p) = setup();
        let ledger = QueryLedger::new();
        let c = candidate_from_source(&p, "mItems.add();").unwrap();
        let v = verify_wheat(&m, &c, &p, &ledger, HeaderMode::MaskName).unwrap();
        assert!(v.sufficient && v.necessary);
        assert_eq!(v.suff_prediction.label, "addItem");
        assert_eq!(v.nec_prediction.unwrap().label, "misc");
    }

    #[test]
    fn return_is_not_sufficient() {
        let (m, p) = setup();
        let c = candidate_from_source(&p, "return;").unwrap();
        let v = verify_wheat(&m, &c, &p, &QueryLedger::new(), HeaderMode::KeepHeader).unwrap();
        assert!(!v.sufficient && !v.necessary && v.nec_prediction.is_none());
    }

    #[test]
    fn log_statement_is_not_necessary() {
        let (m, p) = setup();
        let c = candidate_from_source(&p, r#"log("Add item;");"#).unwrap();
        assert!(!check_necessary(&m, &c, &p, &QueryLedger::new()).unwrap());
    }

    #[test]
    fn full_body_is_necessary_iff_label_is_not_default() {
        let (m, p) = setup();
        let c = candidate(&p, p.ast.body().children.clone());
        assert!(check_necessary(&m, &c, &p, &QueryLedger::new()).unwrap());
    }

    #[test]
    fn empty_candidate_is_checked_not_rejected() {
        let (m, p) = setup();
        let v = verify_wheat(&m, &candidate(&p, vec![]), &p, &QueryLedger::new(), HeaderMode::MaskName).unwrap();
        assert!(!v.sufficient);
        assert_eq!(v.suff_prediction.label, "misc");
    }

    #[test]
    fn foreign_tokens_violate_constituency() {
        let (m, p) = setup();
        let c = candidate_from_source(&p, "mItems.remove();").unwrap();
        let err = verify_wheat(&m, &c, &p, &QueryLedger::new(), HeaderMode::MaskName).unwrap_err();
        assert!(matches!(err, Error::ConstituentViolation { .. }));
    }

    #[test]
    fn masked_header_carries_placeholder() {
        let (m, p) = setup();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let c = candidate_from_source(&p, "mItems.add();").unwrap();
        assert_eq!(serialize(&v.suff_program(&c)), "void METHOD_NAME(int position) {\n  mItems.add();\n}");
    }

    #[test]
    fn cache_is_transparent_and_counts_misses() {
        let (m, p) = setup();
        let cached = QueryLedger::new();
        let uncached = QueryLedger::uncached();
        let c = candidate_from_source(&p, "mItems.add();").unwrap();
        for _ in 0..3 {
            let a = verify_wheat(&m, &c, &p, &cached, HeaderMode::MaskName).unwrap();
            let b = verify_wheat(&m, &c, &p, &uncached, HeaderMode::MaskName).unwrap();
            assert_eq!((a.sufficient, a.necessary), (b.sufficient, b.necessary));
        }
        assert_eq!(cached.total_queries(), 3);
        assert_eq!(uncached.total_queries(), 9);
        assert_eq!(cached.visited(), uncached.visited());
        assert_eq!(cached.visited().len(), 3);
    }
}

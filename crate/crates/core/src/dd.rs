//! Delta debugging over the program's lexemes, tested against the conjoined
//! sufficient and necessary requirement. The baseline Reduce+Mutate is
//! measured against; it stalls on models that are not monotone.
//!
//! A unit is a node owning at least one non-punctuation token, so a
//! multi-lexeme type name such as `List<Obj>` counts once. A unit subset
//! becomes a program by removing every other unit through the shared
//! structural repair, which always yields a parseable tree. Both
//! requirements are the verifier's, exactly as the wheat search uses them.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lang::{
    lexeme_owners, owned_statement_tokens, remove_nodes, statement_tokens, texts, Ast, NodeId, TokenKind,
};
use crate::verify::Verifier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unsatisfied {
    Both,
    Sufficient,
    Necessary,
    #[serde(rename = "pass")]
    Pass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DdStep {
    /// Number of chunks the current set was split into.
    pub granularity: usize,
    /// `Δi` for a chunk, `∇i` for its complement (1-based).
    pub partition: String,
    /// The lexemes of the tested units.
    pub tokens: Vec<String>,
    /// The tested program body, as materialized.
    pub source: String,
    pub unsatisfied: Unsatisfied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DdTrace {
    pub steps: Vec<DdStep>,
    pub final_tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdResult {
    /// The materialized final unit set.
    pub ast: Ast,
    pub units: Vec<NodeId>,
    pub token_count: usize,
    /// Whether the final set passes both requirements; false only when even
    /// the whole program does not.
    pub passes: bool,
    pub trace: DdTrace,
}

impl DdResult {
    pub fn source(&self) -> String {
        crate::lang::serialize_statements(&self.ast.body().children)
    }
}

/// Owner ids of the body's non-punctuation tokens, first-seen order.
pub fn units(ast: &Ast) -> Vec<NodeId> {
    lexeme_owners(&ast.body().children)
}

/// The program restricted to `keep` out of `all` units.
pub fn project(ast: &Ast, all: &[NodeId], keep: &[NodeId]) -> Ast {
    let keep: HashSet<NodeId> = keep.iter().copied().collect();
    let drop = all.iter().copied().filter(|u| !keep.contains(u)).collect();
    remove_nodes(ast, &drop)
}

fn unit_texts(ast: &Ast, units: &[NodeId]) -> Vec<String> {
    let tokens = owned_statement_tokens(&ast.body().children);
    units
        .iter()
        .map(|u| tokens.iter().filter(|t| t.owner == *u && t.kind != TokenKind::Punct).map(|t| t.text.as_str()).collect())
        .collect()
}

struct Tester<'v, 'a> {
    verifier: &'v Verifier<'a>,
    all: Vec<NodeId>,
}

impl Tester<'_, '_> {
    /// Both requirements, each judged on its own so the trace can say which
    /// failed. A projection that cannot be checked fails that requirement.
    fn test(&self, keep: &[NodeId]) -> Result<Unsatisfied> {
        let candidate = project(&self.verifier.original.ast, &self.all, keep);
        let sufficient = judge(self.verifier.sufficient(&candidate))?;
        let necessary = judge(self.verifier.necessary(&candidate))?;
        Ok(match (sufficient, necessary) {
            (true, true) => Unsatisfied::Pass,
            (false, false) => Unsatisfied::Both,
            (false, true) => Unsatisfied::Sufficient,
            (true, false) => Unsatisfied::Necessary,
        })
    }
}

fn judge<P>(check: Result<(bool, P)>) -> Result<bool> {
    match check {
        Ok((ok, _)) => Ok(ok),
        Err(e) if e.is_rejection() => Ok(false),
        Err(e) => Err(e),
    }
}

fn chunks(c: &[NodeId], n: usize) -> Vec<Vec<NodeId>> {
    (0..n).map(|i| c[i * c.len() / n..(i + 1) * c.len() / n].to_vec()).collect()
}

/// Classic ddmin: try each chunk, then each complement; on success restart
/// (chunk: granularity 2, complement: one coarser), else refine until the
/// chunks are single units.
pub fn ddmin_wheat(verifier: &Verifier) -> Result<DdResult> {
    let ast = &verifier.original.ast;
    let tester = Tester { verifier, all: units(ast) };
    let mut c = tester.all.clone();
    let mut n = 2;
    let mut steps = Vec::new();
    let mut record = |granularity: usize, partition: String, keep: &[NodeId], u: Unsatisfied| {
        let source = crate::lang::serialize_statements(&project(ast, &tester.all, keep).body().children);
        steps.push(DdStep { granularity, partition, tokens: unit_texts(ast, keep), source, unsatisfied: u });
    };
    while c.len() >= 2 {
        let parts = chunks(&c, n);
        let mut next = None;
        for (i, delta) in parts.iter().enumerate() {
            let u = tester.test(delta)?;
            record(n, format!("Δ{}", i + 1), delta, u);
            if u == Unsatisfied::Pass {
                next = Some((delta.clone(), 2));
                break;
            }
        }
        if next.is_none() {
            for (i, delta) in parts.iter().enumerate() {
                let nabla: Vec<NodeId> = c.iter().copied().filter(|u| !delta.contains(u)).collect();
                let u = tester.test(&nabla)?;
                record(n, format!("∇{}", i + 1), &nabla, u);
                if u == Unsatisfied::Pass {
                    next = Some((nabla, (n - 1).max(2)));
                    break;
                }
            }
        }
        match next {
            Some((kept, granularity)) => {
                c = kept;
                n = granularity;
            }
            None if n >= c.len() => break,
            None => n = (2 * n).min(c.len()),
        }
    }
    let passes = tester.test(&c)? == Unsatisfied::Pass;
    let result = project(ast, &tester.all, &c);
    let token_count = statement_tokens(&result.body().children).len();
    let final_tokens = texts(&statement_tokens(&result.body().children));
    Ok(DdResult { ast: result, units: c, token_count, passes, trace: DdTrace { steps, final_tokens } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{serialize_statements, Program, RUNNING_EXAMPLE};
    use crate::model::{Rule, RuleConfig, RulePresence};
    use crate::verify::{HeaderMode, QueryLedger};
    use std::collections::BTreeSet;

    fn rule(all_of: &[&str]) -> RulePresence {
        let rule = Rule { all_of: all_of.iter().map(|s| s.to_string()).collect(), none_of: BTreeSet::new(), label: "L".into() };
        RulePresence::new("r", RuleConfig { id: None, rules: vec![rule], default_label: "misc".into() }).unwrap()
    }

    #[test]
    fn running_example_has_eighteen_units() {
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let u = units(&p.ast);
        assert_eq!(u.len(), 18);
        assert_eq!(unit_texts(&p.ast, &u[..2]), ["List<Obj>", "mItems"]);
    }

    #[test]
    fn projection_of_everything_is_the_program() {
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let u = units(&p.ast);
        assert_eq!(project(&p.ast, &u, &u), p.ast);
        assert!(project(&p.ast, &u, &[]).body().children.is_empty());
    }

    #[test]
    fn chunk_boundaries() {
        let c: Vec<NodeId> = (0..5).collect();
        assert_eq!(chunks(&c, 2), [vec![0, 1], vec![2, 3, 4]]);
        assert_eq!(chunks(&c, 5).len(), 5);
    }

    #[test]
    fn monotone_rule_converges_on_the_rule_token() {
        let m = rule(&["add"]);
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let r = ddmin_wheat(&v).unwrap();
        assert!(r.passes);
        assert_eq!(serialize_statements(&r.ast.body().children), "add();");
    }

    #[test]
    fn surrogate_stalls_on_five_lexemes() {
        use crate::corpus::StallSurrogate;
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&StallSurrogate, &p, &ledger, HeaderMode::MaskName).unwrap();
        let r = ddmin_wheat(&v).unwrap();
        assert!(r.passes);
        assert_eq!(unit_texts(&p.ast, &r.units), ["size", "return", "mItems", "add", "position"]);
        let last: Vec<_> = r.trace.steps.iter().rev().take(10).rev().collect();
        for (i, s) in last.iter().enumerate() {
            let (name, want) = if i < 5 { ("Δ", Unsatisfied::Both) } else { ("∇", Unsatisfied::Sufficient) };
            assert_eq!(s.partition, format!("{name}{}", i % 5 + 1));
            assert_eq!((s.granularity, s.unsatisfied), (5, want), "{}", s.source);
        }
    }

    #[test]
    fn constant_model_keeps_everything() {
        let m = rule(&[]);
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let r = ddmin_wheat(&v).unwrap();
        assert!(!r.passes);
        assert_eq!(r.units.len(), 18);
        assert_eq!(r.ast, p.ast);
    }
}

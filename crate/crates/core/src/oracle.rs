//! Exhaustive check that no strictly shorter candidate passes, for programs
//! small enough to enumerate.
//!
//! Candidates are the program's lexeme subsets, materialized exactly as
//! delta debugging materializes them (drop the other units, repair), and
//! judged by the same verifier the extraction used. Subsets are visited by
//! ascending size; a subset of `i` units prints at least `i` tokens, so
//! sizes stop one short of the wheat's token count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dd::{project, units};
use crate::error::{Error, Result};
use crate::lang::{serialize_statements, statement_tokens, Ast, NodeId};
use crate::reduce::combine_k;
use crate::verify::Verifier;

pub const DEFAULT_TOKEN_LIMIT: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct Smaller {
    pub ast: Ast,
    pub token_count: usize,
    pub units: Vec<NodeId>,
}

impl Smaller {
    pub fn source(&self) -> String {
        serialize_statements(&self.ast.body().children)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleVerdict {
    ConfirmedMinimal,
    SmallerFound(Smaller),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub verdict: OracleVerdict,
    /// Subsets enumerated: the sum of `C(n, i)` over the sizes visited.
    pub enumerated: u64,
    /// Subsets whose materialization was short enough to be queried.
    pub tested: u64,
}

/// Serializable summary, for the command line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub program_path: String,
    pub wheat_tokens: usize,
    pub confirmed_minimal: bool,
    pub smaller_source: Option<String>,
    pub smaller_tokens: Option<usize>,
    pub enumerated: u64,
    pub tested: u64,
}

impl OracleReport {
    pub fn summary(&self, program_path: &str, wheat_tokens: usize) -> OracleSummary {
        let smaller = match &self.verdict {
            OracleVerdict::SmallerFound(s) => Some(s),
            OracleVerdict::ConfirmedMinimal => None,
        };
        OracleSummary {
            program_path: program_path.to_string(),
            wheat_tokens,
            confirmed_minimal: smaller.is_none(),
            smaller_source: smaller.map(Smaller::source),
            smaller_tokens: smaller.map(|s| s.token_count),
            enumerated: self.enumerated,
            tested: self.tested,
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Look for a passing candidate with fewer body tokens than `wheat_tokens`.
///
/// `size_cap` bounds the subset size on top of the wheat's own bound;
/// `token_limit` refuses programs whose body is too long to exhaust.
pub fn brute_force_check(
    verifier: &Verifier,
    wheat_tokens: usize,
    size_cap: Option<usize>,
    token_limit: usize,
    parallel: bool,
) -> Result<OracleReport> {
    let ast = &verifier.original.ast;
    let body_tokens = statement_tokens(&ast.body().children).len();
    if body_tokens > token_limit {
        return Err(Error::TokenLimitExceeded { tokens: body_tokens, limit: token_limit });
    }
    let all = units(ast);
    let top = wheat_tokens.saturating_sub(1).min(all.len()).min(size_cap.unwrap_or(usize::MAX));
    let parallel = parallel && verifier.model.concurrency_safe();
    let (mut enumerated, mut tested) = (0, 0);
    let mut best: Option<((usize, usize, usize), Smaller)> = None;
    for size in 0..=top {
        enumerated += binomial(all.len(), size);
        let short: Vec<(usize, Vec<NodeId>, Ast)> = combine_k(all.len(), size)
            .map(|idx| idx.into_iter().map(|i| all[i]).collect::<Vec<_>>())
            .map(|keep| {
                let candidate = project(ast, &all, &keep);
                (keep, candidate)
            })
            .filter(|(_, c)| statement_tokens(&c.body().children).len() < wheat_tokens)
            .enumerate()
            .map(|(i, (keep, c))| (i, keep, c))
            .collect();
        tested += short.len() as u64;
        let check = |(i, keep, c): &(usize, Vec<NodeId>, Ast)| -> Result<Option<((usize, usize, usize), Smaller)>> {
            if !verifier.accepts(c)? {
                return Ok(None);
            }
            let token_count = statement_tokens(&c.body().children).len();
            Ok(Some(((token_count, size, *i), Smaller { ast: c.clone(), token_count, units: keep.clone() })))
        };
        let found: Vec<Result<Option<_>>> =
            if parallel { short.par_iter().map(check).collect() } else { short.iter().map(check).collect() };
        for f in found {
            if let Some(hit) = f? {
                if best.as_ref().is_none_or(|b| hit.0 < b.0) {
                    best = Some(hit);
                }
            }
        }
        // a bigger subset never prints fewer tokens than this size allows
        if best.as_ref().is_some_and(|b| b.0 .0 <= size + 1) {
            break;
        }
    }
    let verdict = match best {
        Some((_, s)) => OracleVerdict::SmallerFound(s),
        None => OracleVerdict::ConfirmedMinimal,
    };
    Ok(OracleReport { verdict, enumerated, tested })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Program;
    use crate::model::{Rule, RuleConfig, RulePresence};
    use crate::mutate::{extract_wheat_with, ExtractOptions};
    use crate::verify::{HeaderMode, QueryLedger};
    use std::collections::BTreeSet;

    fn rules(rules: &[(&[&str], &str)]) -> RulePresence {
        let rules = rules
            .iter()
            .map(|(all, label)| Rule {
                all_of: all.iter().map(|s| s.to_string()).collect(),
                none_of: BTreeSet::new(),
                label: label.to_string(),
            })
            .collect();
        RulePresence::new("r", RuleConfig { id: None, rules, default_label: "misc".into() }).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(14, 0), 1);
        assert_eq!(binomial(14, 7), 3432);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!((0..=10).map(|i| binomial(10, i)).sum::<u64>(), 1024);
    }

    #[test]
    fn extraction_on_a_small_program_is_confirmed() {
        let m = rules(&[(&["add"], "addItem")]);
        let p = Program::parse("void f(){ x = a; items.add(x); }").unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let w = extract_wheat_with(&v, &ExtractOptions::default()).unwrap();
        let r = brute_force_check(&v, w.token_count, None, DEFAULT_TOKEN_LIMIT, false).unwrap();
        assert_eq!(r.verdict, OracleVerdict::ConfirmedMinimal);
        let n = units(&p.ast).len();
        assert_eq!(r.enumerated, (0..w.token_count).map(|i| binomial(n, i)).sum::<u64>());
    }

    #[test]
    fn a_shorter_disjunct_outside_the_fragment_is_found() {
        // `q` alone is sufficient but not necessary (`a(b)` still fires);
        // dropping `q` and `b` together is both
        let m = rules(&[(&["q"], "L"), (&["a", "b"], "L")]);
        let p = Program::parse("void f(){ a(b); q; }").unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let r = brute_force_check(&v, 5, None, DEFAULT_TOKEN_LIMIT, false).unwrap();
        let OracleVerdict::SmallerFound(s) = r.verdict else { panic!("expected a smaller candidate") };
        assert_eq!(s.source(), "b;\nq;");
        assert!(v.verify(&s.ast).unwrap().holds());
    }

    #[test]
    fn single_token_wheat_is_trivially_minimal() {
        let m = rules(&[(&["x"], "L")]);
        let p = Program::parse("void f(){ x; }").unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let r = brute_force_check(&v, 1, None, DEFAULT_TOKEN_LIMIT, false).unwrap();
        assert_eq!(r.verdict, OracleVerdict::ConfirmedMinimal);
        assert_eq!(r.enumerated, 1);
    }

    #[test]
    fn long_programs_are_refused() {
        let m = rules(&[(&["x"], "L")]);
        let p = Program::parse("void f(){ x = a + b + c + d + e + g; }").unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let err = brute_force_check(&v, 3, None, 10, false).unwrap_err();
        assert_eq!(err, Error::TokenLimitExceeded { tokens: 14, limit: 10 });
    }
}

//! Coarse search: the smallest statement subsets that are both sufficient
//! and necessary, by ascending cardinality.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lang::{flatten, Ast, Branch, Node, NodeId, NodeKind, Program, Statement};
use crate::verify::Verifier;

pub const DEFAULT_MAX_K: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    /// Positions in `flatten(program)`, ascending.
    pub indices: Vec<usize>,
    pub statements: Vec<Statement>,
    pub k: usize,
    /// The statements re-nested under the original header.
    pub candidate: Ast,
    pub suff_program: Program,
    pub nec_program: Program,
}

/// Every `k`-subset of `0..n`, in lexicographic order.
pub fn combine_k(n: usize, k: usize) -> Combinations {
    Combinations { n, current: if k <= n { Some((0..k).collect()) } else { None } }
}

pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        // rightmost slot that can still advance
        match (0..k).rev().find(|&i| next[i] < self.n - k + i) {
            Some(i) => {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
            }
            None => self.current = None,
        }
        Some(out)
    }
}

/// Re-nest the selected statements: a statement goes under its nearest
/// selected enclosing predicate, in the branch it came from; statements
/// with no selected ancestor are hoisted to the top level. Source order is
/// kept throughout.
pub fn reconstruct(subset: &[&Statement], program: &Program) -> Ast {
    let all = flatten(program);
    let parent_of: HashMap<NodeId, Option<(NodeId, Branch)>> =
        all.iter().filter(|s| s.is_predicate()).map(|s| (s.origin, s.enclosing)).collect();
    let selected: HashMap<NodeId, usize> =
        subset.iter().enumerate().filter(|(_, s)| s.is_predicate()).map(|(i, s)| (s.origin, i)).collect();

    let mut top = Vec::new();
    let mut under: HashMap<usize, Vec<(Branch, usize)>> = HashMap::new();
    for (i, s) in subset.iter().enumerate() {
        let mut hop = s.enclosing;
        let mut home = None;
        while let Some((pid, branch)) = hop {
            if let Some(&p) = selected.get(&pid) {
                home = Some((p, branch));
                break;
            }
            hop = parent_of.get(&pid).copied().flatten();
        }
        match home {
            Some((p, branch)) => under.entry(p).or_default().push((branch, i)),
            None => top.push(i),
        }
    }

    let mut b = Builder { subset, under, program, next_id: program.ast.next_id() };
    let stmts = top.into_iter().map(|i| b.build(i)).collect();
    program.ast.with_body(stmts, program.ast.body().id)
}

struct Builder<'a> {
    subset: &'a [&'a Statement],
    under: HashMap<usize, Vec<(Branch, usize)>>,
    program: &'a Program,
    next_id: NodeId,
}

impl Builder<'_> {
    fn build(&mut self, i: usize) -> Node {
        let s = self.subset[i];
        if !s.is_predicate() {
            return s.ast.clone();
        }
        let kids = self.under.remove(&i).unwrap_or_default();
        let original = self.program.ast.root.find(s.origin).expect("predicate comes from the program").clone();
        let mut node = s.ast.clone();
        match node.kind {
            NodeKind::If => {
                let then = self.group(&kids, |b| b == Branch::Then);
                let alt = self.group(&kids, |b| matches!(b, Branch::Else | Branch::ElseIf));
                let alt = match alt.as_slice() {
                    [] => None,
                    [only] if only.kind == NodeKind::If && kids.iter().any(|(b, _)| *b == Branch::ElseIf) => Some(only.clone()),
                    _ => Some(Node::new(self.block_id(&original, 2), NodeKind::Block, None, alt)),
                };
                if !then.is_empty() || alt.is_some() {
                    node.children.push(Node::new(self.block_id(&original, 1), NodeKind::Block, None, then));
                }
                node.children.extend(alt);
            }
            NodeKind::While | NodeKind::For => {
                let body = self.group(&kids, |b| b == Branch::Body);
                if !body.is_empty() {
                    let slot = node.children.len();
                    node.children.push(Node::new(self.block_id(&original, slot), NodeKind::Block, None, body));
                }
            }
            NodeKind::Switch => {
                for c in 1..node.children.len() {
                    let stmts = self.group(&kids, |b| b == Branch::Case(c - 1));
                    node.children[c].children.extend(stmts);
                }
            }
            _ => unreachable!("only control statements are predicates"),
        }
        node
    }

    fn group(&mut self, kids: &[(Branch, usize)], want: impl Fn(Branch) -> bool) -> Vec<Node> {
        kids.iter().filter(|(b, _)| want(*b)).map(|&(_, j)| self.build(j)).collect()
    }

    /// Reuse the original block's id when it had one in that slot.
    fn block_id(&mut self, original: &Node, slot: usize) -> NodeId {
        match original.children.get(slot) {
            Some(b) if b.kind == NodeKind::Block => b.id,
            _ => {
                self.next_id += 1;
                self.next_id - 1
            }
        }
    }
}

/// All fragments of the smallest cardinality `k* <= max_k` that pass both
/// checks, in enumeration order.
///
/// A program with a single statement may use it whole; otherwise the full
/// statement set is never a candidate.
pub fn find_minimum_fragments(verifier: &Verifier, max_k: usize, parallel: bool) -> Result<Vec<Fragment>> {
    let program = verifier.original;
    let statements = flatten(program);
    let n = statements.len();
    let top = max_k.min(n.saturating_sub(1).max(1)).min(n);
    let parallel = parallel && verifier.model.concurrency_safe();
    for k in 1..=top {
        let subsets: Vec<Vec<usize>> = combine_k(n, k).collect();
        let attempt = |idx: &Vec<usize>| -> Result<Option<Fragment>> {
            let chosen: Vec<&Statement> = idx.iter().map(|&i| &statements[i]).collect();
            let candidate = reconstruct(&chosen, program);
            if !verifier.accepts(&candidate)? {
                return Ok(None);
            }
            let suff_program = Program::from_ast(verifier.suff_program(&candidate));
            let nec_program = Program::from_ast(verifier.nec_program(&candidate)?);
            Ok(Some(Fragment {
                indices: idx.clone(),
                statements: chosen.into_iter().cloned().collect(),
                k,
                candidate,
                suff_program,
                nec_program,
            }))
        };
        let results: Vec<Result<Option<Fragment>>> =
            if parallel { subsets.par_iter().map(attempt).collect() } else { subsets.iter().map(attempt).collect() };
        let mut found = Vec::new();
        for r in results {
            found.extend(r?);
        }
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Err(Error::FragmentSearchExhausted { max_k })
}

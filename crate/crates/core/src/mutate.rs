//! Fine search: postorder leaf deletion and `oov` substitution inside each
//! minimum fragment until nothing more can go, then the smallest result.
//! Also the end-to-end extraction pipeline.

use std::collections::{BTreeMap, HashSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{
    owned_statement_tokens, remove_nodes, serialize_statements, statement_tokens, texts, Ast, Node, NodeId, NodeKind, Program, Token,
};
use crate::model::Model;
use crate::reduce::{find_minimum_fragments, Fragment, DEFAULT_MAX_K};
use crate::verify::{HeaderMode, QueryLedger, Verdict, Verifier};
use crate::OOV;

pub const DEFAULT_FIXPOINT_CAP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractOptions {
    pub max_k: usize,
    pub fixpoint_cap: usize,
    pub header: HeaderMode,
    /// Evaluate candidates concurrently when the model allows it.
    pub parallel: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { max_k: DEFAULT_MAX_K, fixpoint_cap: DEFAULT_FIXPOINT_CAP, header: HeaderMode::default(), parallel: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wheat {
    /// Original header around the surviving statements.
    pub ast: Ast,
    /// Body tokens of `ast`.
    pub tokens: Vec<Token>,
    pub label: String,
    pub source_fragment: Fragment,
    pub verdict: Verdict,
    pub token_count: usize,
    /// Leaves now reading `oov`, with what they said before.
    pub oov_substitutions: Vec<(NodeId, String)>,
    /// Model queries made by the whole extraction.
    pub queries: u64,
}

impl Wheat {
    pub fn source(&self) -> String {
        serialize_statements(&self.ast.body().children)
    }

    pub fn report(&self, program_path: &str, elapsed_ms: u64) -> WheatReport {
        WheatReport {
            program_path: program_path.to_string(),
            label: self.label.clone(),
            wheat_source: self.source(),
            wheat_tokens: texts(&self.tokens),
            token_count: self.token_count,
            fragment_k: self.source_fragment.k,
            queries: self.queries,
            elapsed_ms,
            oov_substitutions: self
                .oov_substitutions
                .iter()
                .map(|(node, original)| OovSubstitution { node: *node, original: original.clone() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OovSubstitution {
    pub node: NodeId,
    pub original: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WheatReport {
    pub program_path: String,
    pub label: String,
    pub wheat_source: String,
    pub wheat_tokens: Vec<String>,
    pub token_count: usize,
    pub fragment_k: usize,
    pub queries: u64,
    pub elapsed_ms: u64,
    pub oov_substitutions: Vec<OovSubstitution>,
}

/// Nodes the search may delete. Every token is a leaf of the tree, so any
/// node that prints a token (a keyword, an operator, a name, a grouping
/// parenthesis) can go, taking with it the minimal structure the repair
/// requires. Argument lists stay: without one a call would turn into a
/// bare name, which is a change of kind rather than a removal. So does a
/// then-block an else still needs.
pub fn deletable(root: &Ast, id: NodeId) -> bool {
    let body = root.body();
    if id == body.id || !owned_statement_tokens(&body.children).iter().any(|t| t.owner == id) {
        return false;
    }
    match parent(body, id) {
        _ if body.find(id).is_some_and(|n| n.kind == NodeKind::ArgList) => false,
        Some((p, 1)) if p.kind == NodeKind::If && p.children.len() == 3 => false,
        _ => true,
    }
}

/// Leaves the search may rename to `oov`.
pub fn mutable(root: &Ast, id: NodeId) -> bool {
    root.body().find(id).is_some_and(|n| n.kind.is_leaf_kind() && n.children.is_empty())
}

fn parent(root: &Node, id: NodeId) -> Option<(&Node, usize)> {
    for (i, c) in root.children.iter().enumerate() {
        if c.id == id {
            return Some((root, i));
        }
        if let Some(found) = parent(c, id) {
            return Some(found);
        }
    }
    None
}

fn postorder_ids(n: &Node, out: &mut Vec<NodeId>) {
    for c in &n.children {
        postorder_ids(c, out);
    }
    out.push(n.id);
}

/// Remove the node `id`, with whatever structure that drags along, if the
/// result still verifies. On failure `root` is untouched.
pub fn delete_node(verifier: &Verifier, root: &mut Ast, id: NodeId) -> Result<bool> {
    if !deletable(root, id) {
        return Ok(false);
    }
    let next = remove_nodes(root, &HashSet::from([id]));
    // repair may rebuild what it removed (a statement around a lone expression)
    if next.body().same_shape(root.body()) || !verifier.accepts(&next)? {
        return Ok(false);
    }
    *root = next;
    Ok(true)
}

/// Rename the leaf `id` to `oov` if the result still verifies. A leaf that
/// already reads `oov` succeeds without change.
pub fn mutate_node(verifier: &Verifier, root: &mut Ast, id: NodeId) -> Result<bool> {
    if !mutable(root, id) {
        return Ok(false);
    }
    let mut next = root.clone();
    let leaf = next.body_mut().find_mut(id).expect("mutable leaf exists");
    if leaf.value() == OOV {
        return Ok(true);
    }
    leaf.kind = NodeKind::Identifier;
    leaf.value = Some(OOV.to_string());
    if !verifier.accepts(&next)? {
        return Ok(false);
    }
    *root = next;
    Ok(true)
}

/// Two postorder sweeps: first every deletable node is deleted where
/// possible, then every remaining name that could not go is renamed.
/// Renaming commits a slot to `oov` for good, so it waits until nothing
/// more can be deleted in this pass.
pub fn mutate_pass(verifier: &Verifier, root: &mut Ast) -> Result<bool> {
    let mut order = Vec::new();
    postorder_ids(root.body(), &mut order);
    let mut changed = false;
    for &id in &order {
        if root.body().find(id).is_some() && delete_node(verifier, root, id)? {
            changed = true;
        }
    }
    for &id in &order {
        let Some(node) = root.body().find(id) else { continue };
        if node.value.as_deref() != Some(OOV) && mutate_node(verifier, root, id)? {
            changed = true;
        }
    }
    Ok(changed)
}

pub fn mutate_to_fixpoint(verifier: &Verifier, root: &Ast, cap: usize) -> Result<Ast> {
    let mut current = root.clone();
    for _ in 0..cap {
        if !mutate_pass(verifier, &mut current)? {
            return Ok(current);
        }
    }
    Err(Error::FixpointCapExceeded { cap, last: Box::new(current) })
}

/// Index of the smallest tree by (body tokens, body nodes, position).
pub fn smallest(trees: &[Ast]) -> Option<usize> {
    (0..trees.len()).min_by_key(|&i| {
        let t = &trees[i];
        (statement_tokens(&t.body().children).len(), t.body_node_count(), i)
    })
}

/// Fixpoint every fragment and keep the smallest result.
pub fn find_features(verifier: &Verifier, fragments: Vec<Fragment>, options: &ExtractOptions) -> Result<Wheat> {
    let run = |f: &Fragment| mutate_to_fixpoint(verifier, &f.candidate, options.fixpoint_cap);
    let results: Vec<Result<Ast>> = if options.parallel && verifier.model.concurrency_safe() {
        fragments.par_iter().map(run).collect()
    } else {
        fragments.iter().map(run).collect()
    };
    let trees = results.into_iter().collect::<Result<Vec<_>>>()?;
    let best = smallest(&trees).expect("reduce yields at least one fragment");
    let ast = trees[best].clone();
    let verdict = verifier.verify(&ast)?;
    let source_fragment = fragments.into_iter().nth(best).expect("index in range");
    let oov_substitutions = substitutions(&source_fragment.candidate, &ast);
    let tokens = statement_tokens(&ast.body().children);
    Ok(Wheat {
        token_count: tokens.len(),
        tokens,
        label: verifier.label().to_string(),
        source_fragment,
        verdict,
        oov_substitutions,
        queries: verifier.ledger.total_queries(),
        ast,
    })
}

fn substitutions(before: &Ast, after: &Ast) -> Vec<(NodeId, String)> {
    let original: BTreeMap<NodeId, &str> =
        before.body().preorder().into_iter().filter(|n| n.kind.is_leaf_kind()).map(|n| (n.id, n.value())).collect();
    after
        .body()
        .preorder()
        .into_iter()
        .filter(|n| n.value.as_deref() == Some(OOV))
        .filter_map(|n| original.get(&n.id).filter(|v| **v != OOV).map(|v| (n.id, v.to_string())))
        .collect()
}

pub fn extract_wheat_with(verifier: &Verifier, options: &ExtractOptions) -> Result<Wheat> {
    let fragments = find_minimum_fragments(verifier, options.max_k, options.parallel)?;
    find_features(verifier, fragments, options)
}

pub fn extract_wheat(program: &Program, model: &dyn Model, options: &ExtractOptions) -> Result<Wheat> {
    let ledger = QueryLedger::new();
    let verifier = Verifier::new(model, program, &ledger, options.header)?;
    extract_wheat_with(&verifier, options)
}

/// Extraction plus its report, timed.
pub fn extract_report(program_path: &str, program: &Program, model: &dyn Model, options: &ExtractOptions) -> Result<WheatReport> {
    let start = Instant::now();
    let wheat = extract_wheat(program, model, options)?;
    Ok(wheat.report(program_path, start.elapsed().as_millis() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, RUNNING_EXAMPLE};
    use crate::model::{ModelError, ModelKind, Prediction, Rule, RuleConfig, RulePresence};
    use crate::verify::candidate_from_source;

    fn rules(rules: &[(&[&str], &[&str])]) -> RulePresence {
        let rules = rules
            .iter()
            .map(|(all, none)| Rule {
                all_of: all.iter().map(|s| s.to_string()).collect(),
                none_of: none.iter().map(|s| s.to_string()).collect(),
                label: "L".into(),
            })
            .collect();
        RulePresence::new("r", RuleConfig { id: None, rules, default_label: "misc".into() }).unwrap()
    }

    fn find_leaf(ast: &Ast, value: &str) -> NodeId {
        ast.body().preorder().into_iter().find(|n| n.value.as_deref() == Some(value)).unwrap().id
    }

    fn body(ast: &Ast) -> String {
        serialize_statements(&ast.body().children)
    }

    #[test]
    fn deleting_an_argument_drops_its_comma() {
        let m = rules(&[(&["add", "genItem"], &[])]);
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let mut root = candidate_from_source(&p, "mItems.add(position, genItem());").unwrap();
        let pos = find_leaf(&root, "position");
        assert!(delete_node(&v, &mut root, pos).unwrap());
        assert_eq!(body(&root), "mItems.add(genItem());");
    }

    #[test]
    fn rejected_edits_leave_the_tree_alone() {
        let m = rules(&[(&["add"], &[])]);
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let mut root = candidate_from_source(&p, "mItems.add();").unwrap();
        let before = root.clone();
        let add = find_leaf(&root, "add");
        assert!(!delete_node(&v, &mut root, add).unwrap());
        assert!(!mutate_node(&v, &mut root, add).unwrap());
        assert_eq!(root, before);
    }

    #[test]
    fn mutating_oov_is_a_no_op_success() {
        let m = rules(&[(&["add"], &[])]);
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let mut root = candidate_from_source(&p, "oov.add();").unwrap();
        let before = root.clone();
        assert!(mutate_node(&v, &mut root, find_leaf(&before, OOV)).unwrap());
        assert_eq!(root, before);
    }

    #[test]
    fn sole_child_deletion_takes_the_statement() {
        let m = rules(&[(&["add"], &[])]);
        let p = Program::parse("void f(){ add(); x; }").unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let mut root = candidate_from_source(&p, "add(); x;").unwrap();
        let x = find_leaf(&root, "x");
        assert!(delete_node(&v, &mut root, x).unwrap());
        assert_eq!(body(&root), "add();");
    }

    /// Answers `L` whenever the body reads a field of `foo`.
    struct FieldShape;

    impl Model for FieldShape {
        fn id(&self) -> &str {
            "field-shape"
        }
        fn kind(&self) -> ModelKind {
            ModelKind::Custom
        }
        fn concurrency_safe(&self) -> bool {
            true
        }
        fn predict(&self, source: &str) -> std::result::Result<Prediction, ModelError> {
            let ast = parse(source)?;
            let hit = ast.body().preorder().into_iter().any(|n| {
                n.kind == NodeKind::FieldAccess && n.children[0].value.as_deref() == Some("foo")
            });
            Ok(Prediction::certain(if hit { "L" } else { "misc" }))
        }
    }

    #[test]
    fn field_name_goes_to_oov_when_only_the_shape_matters() {
        let p = Program::parse("void f(){ foo.bar; x(); }").unwrap();
        let w = extract_wheat(&p, &FieldShape, &ExtractOptions::default()).unwrap();
        assert_eq!(w.source(), "foo.oov;");
        assert_eq!(w.oov_substitutions.len(), 1);
        assert_eq!(w.oov_substitutions[0].1, "bar");
    }

    #[test]
    fn one_pass_over_the_add_call() {
        let m = rules(&[(&["add"], &[])]);
        let p = Program::parse(RUNNING_EXAMPLE).unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let mut root = candidate_from_source(&p, "mItems.add(position, genItem());").unwrap();
        assert!(mutate_pass(&v, &mut root).unwrap());
        // the receiver goes too: `add` alone still fires the rule
        assert_eq!(body(&root), "add();");
        assert!(!mutate_pass(&v, &mut root).unwrap());
    }

    #[test]
    fn deletion_order_releases_a_later_leaf() {
        // `b` may only go once `a` has
        let m = rules(&[(&["x", "a", "b"], &[]), (&["x"], &["a"])]);
        let p = Program::parse("void f(){ b; a; x; }").unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let mut root = candidate_from_source(&p, "b; a; x;").unwrap();
        // `a` goes; `b` cannot in the same sweep, only its name can
        assert!(mutate_pass(&v, &mut root).unwrap());
        assert_eq!(body(&root), "oov;\nx;");
        assert!(mutate_pass(&v, &mut root).unwrap());
        assert_eq!(body(&root), "x;");
        let again = mutate_to_fixpoint(&v, &root, 50).unwrap();
        assert_eq!(again, root);
    }

    #[test]
    fn smallest_prefers_fewer_tokens_then_fewer_nodes() {
        let p = Program::parse("void f(){ (a); a.b; c.d.e; }").unwrap();
        let trees: Vec<Ast> =
            ["c.d.e;", "a.b;", "(a);"].iter().map(|s| candidate_from_source(&p, s).unwrap()).collect();
        assert_eq!(smallest(&trees), Some(2));
        assert_eq!(smallest(&trees[..2]), Some(1));
    }

    #[test]
    fn extraction_end_to_end() {
        let m = rules(&[(&["add"], &[])]);
        let w = extract_wheat(&Program::parse(RUNNING_EXAMPLE).unwrap(), &m, &ExtractOptions::default()).unwrap();
        assert_eq!(w.source(), "add();");
        assert_eq!(w.token_count, 4);
        assert_eq!(w.source_fragment.k, 1);
        assert!(w.verdict.holds());

        let x = rules(&[(&["x"], &[])]);
        let w = extract_wheat(&Program::parse("void f(){ x; }").unwrap(), &x, &ExtractOptions::default()).unwrap();
        assert_eq!(w.source(), "x;");

        let constant = rules(&[(&[], &[])]);
        let err = extract_wheat(&Program::parse(RUNNING_EXAMPLE).unwrap(), &constant, &ExtractOptions::default());
        assert!(matches!(err, Err(Error::FragmentSearchExhausted { .. })));
    }

    #[test]
    fn every_token_owner_is_deletable() {
        let p = Program::parse("void f(){ List<Obj> m = g(); if(a > b) { return c; } h(); }").unwrap();
        let body = p.ast.body();
        let decl = &body.children[0];
        assert!(deletable(&p.ast, decl.children[0].id));
        let iff = &body.children[1];
        assert!(deletable(&p.ast, iff.id));
        assert!(deletable(&p.ast, iff.children[0].id));
        assert!(deletable(&p.ast, iff.children[1].children[0].id));
        let call = &body.children[2].children[0];
        assert!(!deletable(&p.ast, call.children[1].id));
        assert!(deletable(&p.ast, body.children[2].id));
        assert!(!deletable(&p.ast, body.id));
    }

    #[test]
    fn dropping_a_keyword_hoists_what_it_held() {
        let m = rules(&[(&["c"], &[])]);
        let p = Program::parse("void f(){ g(); return c; }").unwrap();
        let ledger = QueryLedger::new();
        let v = Verifier::new(&m, &p, &ledger, HeaderMode::MaskName).unwrap();
        let mut root = candidate_from_source(&p, "return c;").unwrap();
        let ret = root.body().children[0].id;
        assert!(delete_node(&v, &mut root, ret).unwrap());
        assert_eq!(body(&root), "c;");
    }
}

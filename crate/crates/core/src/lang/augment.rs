//! Semantic edges over a method AST, computed by one forward pass.
//!
//! Loops are walked once (no fixpoint over back edges); branches are joined
//! by unioning the per-variable last-event sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ast::{Ast, Node, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    LastRead,
    LastWrite,
    ComputedFrom,
    LastLexicalUse,
    GuardedBy,
    GuardedByNegation,
    FormalArgName,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 7] = [
        EdgeKind::LastRead,
        EdgeKind::LastWrite,
        EdgeKind::ComputedFrom,
        EdgeKind::LastLexicalUse,
        EdgeKind::GuardedBy,
        EdgeKind::GuardedByNegation,
        EdgeKind::FormalArgName,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SemanticEdge {
    pub kind: EdgeKind,
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedAst {
    pub ast: Ast,
    pub edges: Vec<SemanticEdge>,
}

impl AugmentedAst {
    pub fn kinds(&self) -> BTreeSet<EdgeKind> {
        self.edges.iter().map(|e| e.kind).collect()
    }

    pub fn count(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.kind == kind).count()
    }
}

pub fn augment(ast: &Ast) -> AugmentedAst {
    let mut pass = Pass { edges: BTreeSet::new(), guards: Vec::new() };
    let mut flow = Flow::default();
    for p in &ast.params().children {
        flow.write(&p.children[1]);
    }
    pass.block(ast.body(), &mut flow);
    lexical_chain(ast, &mut pass.edges);
    formal_args(ast, &mut pass.edges);
    AugmentedAst { ast: ast.clone(), edges: pass.edges.into_iter().collect() }
}

#[derive(Default, Clone)]
struct Flow {
    last_read: BTreeMap<String, BTreeSet<NodeId>>,
    last_write: BTreeMap<String, BTreeSet<NodeId>>,
}

impl Flow {
    fn write(&mut self, ident: &Node) {
        self.last_write.insert(ident.value().to_string(), BTreeSet::from([ident.id]));
    }

    fn join(&mut self, other: Flow) {
        for (k, v) in other.last_read {
            self.last_read.entry(k).or_default().extend(v);
        }
        for (k, v) in other.last_write {
            self.last_write.entry(k).or_default().extend(v);
        }
    }
}

struct Pass {
    edges: BTreeSet<SemanticEdge>,
    // (guard expression, variables it mentions, negated)
    guards: Vec<(NodeId, BTreeSet<String>, bool)>,
}

/// Identifier leaves that denote variables, in source order.
fn variables(e: &Node) -> Vec<&Node> {
    fn go<'a>(n: &'a Node, out: &mut Vec<&'a Node>) {
        match n.kind {
            NodeKind::Identifier => out.push(n),
            NodeKind::Call => {
                // a bare callee names a method, not a variable
                if n.children[0].kind != NodeKind::Identifier {
                    go(&n.children[0], out);
                }
                go(&n.children[1], out);
            }
            NodeKind::FieldAccess => go(&n.children[0], out),
            NodeKind::VarDecl => {
                go(&n.children[1], out);
                if let Some(init) = n.children.get(2) {
                    go(init, out);
                }
            }
            _ => n.children.iter().for_each(|c| go(c, out)),
        }
    }
    let mut out = Vec::new();
    go(e, &mut out);
    out
}

impl Pass {
    fn edge(&mut self, kind: EdgeKind, from: NodeId, to: NodeId) {
        self.edges.insert(SemanticEdge { kind, from, to });
    }

    fn read(&mut self, ident: &Node, flow: &mut Flow) {
        let name = ident.value().to_string();
        for &to in flow.last_read.get(&name).into_iter().flatten() {
            self.edge(EdgeKind::LastRead, ident.id, to);
        }
        for &to in flow.last_write.get(&name).into_iter().flatten() {
            self.edge(EdgeKind::LastWrite, ident.id, to);
        }
        let guards: Vec<_> = self.guards.iter().filter(|(_, vars, _)| vars.contains(&name)).cloned().collect();
        for (guard, _, negated) in guards {
            let kind = if negated { EdgeKind::GuardedByNegation } else { EdgeKind::GuardedBy };
            self.edge(kind, ident.id, guard);
        }
        flow.last_read.insert(name, BTreeSet::from([ident.id]));
    }

    fn reads(&mut self, e: &Node, flow: &mut Flow) {
        for v in variables(e) {
            self.read(v, flow);
        }
    }

    fn assign(&mut self, target: &Node, value: Option<&Node>, compound: bool, flow: &mut Flow) {
        if let Some(v) = value {
            self.reads(v, flow);
        }
        let targets = variables(target);
        if target.kind != NodeKind::Identifier || compound {
            self.reads(target, flow);
        }
        if let Some(v) = value {
            let sources: Vec<NodeId> = variables(v).iter().map(|n| n.id).collect();
            for t in &targets {
                for &s in &sources {
                    self.edge(EdgeKind::ComputedFrom, t.id, s);
                }
            }
        }
        if target.kind == NodeKind::Identifier {
            flow.write(target);
        }
    }

    fn block(&mut self, b: &Node, flow: &mut Flow) {
        for s in &b.children {
            self.statement(s, flow);
        }
    }

    fn guarded(&mut self, guard: &Node, negated: bool, body: Option<&Node>, flow: &mut Flow) {
        let Some(body) = body else { return };
        let vars = variables(guard).iter().map(|n| n.value().to_string()).collect();
        self.guards.push((guard.id, vars, negated));
        if body.kind == NodeKind::If {
            self.statement(body, flow);
        } else {
            self.block(body, flow);
        }
        self.guards.pop();
    }

    fn statement(&mut self, s: &Node, flow: &mut Flow) {
        match s.kind {
            NodeKind::VarDecl => self.assign(&s.children[1], s.children.get(2), false, flow),
            NodeKind::Assign => self.assign(&s.children[0], Some(&s.children[1]), s.value() != "=", flow),
            NodeKind::If => {
                let cond = &s.children[0];
                self.reads(cond, flow);
                let mut then_flow = flow.clone();
                self.guarded(cond, false, s.children.get(1), &mut then_flow);
                let mut else_flow = flow.clone();
                self.guarded(cond, true, s.children.get(2), &mut else_flow);
                then_flow.join(else_flow);
                *flow = then_flow;
            }
            NodeKind::While => {
                let cond = &s.children[0];
                self.reads(cond, flow);
                let mut body_flow = flow.clone();
                self.guarded(cond, false, s.children.get(1), &mut body_flow);
                flow.join(body_flow);
            }
            NodeKind::For => {
                self.statement(&s.children[0], flow);
                let cond = &s.children[1];
                self.reads(cond, flow);
                let mut body_flow = flow.clone();
                self.guarded(cond, false, s.children.get(3), &mut body_flow);
                self.statement(&s.children[2], &mut body_flow);
                flow.join(body_flow);
            }
            NodeKind::Switch => {
                self.reads(&s.children[0], flow);
                let entry = flow.clone();
                for case in &s.children[1..] {
                    let mut case_flow = entry.clone();
                    for st in case.children.iter().filter(|c| c.kind.is_statement()) {
                        self.statement(st, &mut case_flow);
                    }
                    flow.join(case_flow);
                }
            }
            _ => {
                for c in &s.children {
                    self.reads(c, flow);
                }
            }
        }
    }
}

fn lexical_chain(ast: &Ast, edges: &mut BTreeSet<SemanticEdge>) {
    let mut last: BTreeMap<&str, NodeId> = BTreeMap::new();
    let params = ast.params().children.iter().map(|p| &p.children[1]);
    let body: Vec<&Node> = ast.body().children.iter().flat_map(variables).collect();
    for v in params.chain(body) {
        if let Some(&prev) = last.get(v.value()) {
            edges.insert(SemanticEdge { kind: EdgeKind::LastLexicalUse, from: v.id, to: prev });
        }
        last.insert(v.value(), v.id);
    }
}

fn formal_args(ast: &Ast, edges: &mut BTreeSet<SemanticEdge>) {
    let params: Vec<&Node> = ast.params().children.iter().map(|p| &p.children[1]).collect();
    for n in ast.body().preorder() {
        if n.kind != NodeKind::Call || n.children[0].kind != NodeKind::Identifier || n.children[0].value() != ast.name() {
            continue;
        }
        for (arg, param) in n.children[1].children.iter().zip(&params) {
            if arg.kind == NodeKind::Identifier {
                edges.insert(SemanticEdge { kind: EdgeKind::FormalArgName, from: arg.id, to: param.id });
            }
        }
    }
}

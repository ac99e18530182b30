use serde::{Deserialize, Serialize};

use super::ast::{Node, NodeId, NodeKind};
use super::serialize::serialize_node;
use super::Program;

/// Where a flattened statement lived inside its enclosing control statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    Then,
    Else,
    /// The `if` of an `else if`, sitting directly in the else slot.
    ElseIf,
    Body,
    Case(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    /// The statement, or a control statement's predicate with no body.
    pub ast: Node,
    /// Id of the statement (or control statement) in the program.
    pub origin: NodeId,
    pub enclosing: Option<(NodeId, Branch)>,
}

impl Statement {
    pub fn source(&self) -> String {
        serialize_node(&self.ast)
    }

    pub fn is_predicate(&self) -> bool {
        self.ast.kind.is_control()
    }
}

pub fn flatten(program: &Program) -> Vec<Statement> {
    let mut out = Vec::new();
    flatten_into(&program.ast.body().children, None, &mut out);
    out
}

fn flatten_into(stmts: &[Node], enclosing: Option<(NodeId, Branch)>, out: &mut Vec<Statement>) {
    for s in stmts {
        flatten_one(s, enclosing, out);
    }
}

fn flatten_one(s: &Node, enclosing: Option<(NodeId, Branch)>, out: &mut Vec<Statement>) {
    let mut emit = |ast: Node| out.push(Statement { ast, origin: s.id, enclosing });
    match s.kind {
        NodeKind::If => {
            emit(Node::new(s.id, NodeKind::If, None, vec![s.children[0].clone()]));
            if let Some(then) = s.children.get(1) {
                flatten_into(&then.children, Some((s.id, Branch::Then)), out);
            }
            match s.children.get(2) {
                Some(alt) if alt.kind == NodeKind::If => flatten_one(alt, Some((s.id, Branch::ElseIf)), out),
                Some(alt) => flatten_into(&alt.children, Some((s.id, Branch::Else)), out),
                None => {}
            }
        }
        NodeKind::While | NodeKind::For => {
            let header = if s.kind == NodeKind::While { 1 } else { 3 };
            emit(Node::new(s.id, s.kind, None, s.children[..header].to_vec()));
            if let Some(body) = s.children.get(header) {
                flatten_into(&body.children, Some((s.id, Branch::Body)), out);
            }
        }
        NodeKind::Switch => {
            // case labels travel with the predicate
            let mut pred = vec![s.children[0].clone()];
            for case in &s.children[1..] {
                let labels = if case.value() == "case" { vec![case.children[0].clone()] } else { vec![] };
                pred.push(Node::new(case.id, NodeKind::Case, case.value.clone(), labels));
            }
            emit(Node::new(s.id, NodeKind::Switch, None, pred));
            for (i, case) in s.children[1..].iter().enumerate() {
                let skip = usize::from(case.value() == "case");
                flatten_into(&case.children[skip..], Some((s.id, Branch::Case(i))), out);
            }
        }
        _ => emit(s.clone()),
    }
}

//! Removing a set of nodes from a tree and repairing what is left.
//!
//! Every structural edit in the crate goes through [`remove_nodes`]:
//! subtraction removes the nodes a fragment matched, leaf deletion removes
//! one leaf, and the DD projection removes the lexemes it dropped. Removed
//! interior nodes leave their surviving children "dangling"; those are
//! re-homed to the nearest list context (argument list or statement list)
//! in source order. Parents that lose a mandatory child are repaired:
//! binary operators and field accesses collapse onto the surviving operand,
//! control statements without a predicate dissolve into their bodies, and
//! calls without a callee dissolve into their arguments.

use std::collections::HashSet;

use super::ast::{Ast, Node, NodeId, NodeKind};
use super::token::{tokenize, TokenKind};

struct Out {
    node: Option<Node>,
    dangling: Vec<Node>,
}

impl Out {
    fn keep(node: Node, dangling: Vec<Node>) -> Out {
        Out { node: Some(node), dangling }
    }
    fn gone(dangling: Vec<Node>) -> Out {
        Out { node: None, dangling }
    }
    /// The node (if any) followed by its dangling pieces.
    fn pieces(self) -> Vec<Node> {
        self.node.into_iter().chain(self.dangling).collect()
    }
}

struct Remover<'a> {
    image: &'a HashSet<NodeId>,
    next_id: NodeId,
}

/// Remove `image` from the method `ast`, repairing the remainder.
/// The method header is never touched.
pub fn remove_nodes(ast: &Ast, image: &HashSet<NodeId>) -> Ast {
    let mut r = Remover { image, next_id: ast.next_id() };
    let body = r.block(ast.body());
    let mut root = ast.root.clone();
    *root.children.last_mut().expect("method has a body") = body;
    Ast::new(root)
}

/// Re-home loose pieces as statements: expressions become `e;`, blocks and
/// case clauses are spliced, type names are dropped.
pub fn as_statements(pieces: Vec<Node>, next_id: &mut NodeId) -> Vec<Node> {
    let mut out = Vec::new();
    for p in pieces {
        match p.kind {
            k if k.is_statement() => out.push(p),
            NodeKind::Block | NodeKind::ArgList => out.extend(as_statements(p.children, next_id)),
            NodeKind::Case => out.extend(as_statements(p.children, next_id)),
            NodeKind::Identifier if !is_plain_identifier(p.value()) => {}
            k if k.is_expression() => {
                let id = *next_id;
                *next_id += 1;
                out.push(Node::new(id, NodeKind::ExprStmt, None, vec![p]));
            }
            _ => {}
        }
    }
    out
}

fn is_plain_identifier(text: &str) -> bool {
    matches!(tokenize(text).as_deref(), Ok([t]) if t.kind == TokenKind::Identifier)
}

impl Remover<'_> {
    fn fresh(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn statements(&mut self, pieces: Vec<Node>) -> Vec<Node> {
        let mut next = self.next_id;
        let out = as_statements(pieces, &mut next);
        self.next_id = next;
        out
    }

    /// Statement lists never disappear; they absorb dangling pieces.
    fn block(&mut self, b: &Node) -> Node {
        let stmts = self.statement_list(&b.children);
        Node::new(b.id, b.kind, b.value.clone(), stmts)
    }

    fn statement_list(&mut self, stmts: &[Node]) -> Vec<Node> {
        let mut out = Vec::new();
        for s in stmts {
            let pieces = self.visit(s).pieces();
            out.extend(self.statements(pieces));
        }
        out
    }

    fn visit(&mut self, n: &Node) -> Out {
        if self.image.contains(&n.id) {
            let mut dangling = Vec::new();
            for (i, c) in n.children.iter().enumerate() {
                // a declaration's type is not an expression; it goes with it
                if n.kind == NodeKind::VarDecl && i == 0 {
                    continue;
                }
                dangling.extend(self.visit(c).pieces());
            }
            return Out::gone(dangling);
        }
        match n.kind {
            NodeKind::Identifier | NodeKind::Literal => Out::keep(n.clone(), vec![]),
            NodeKind::Block => Out::keep(self.block(n), vec![]),
            NodeKind::ArgList => {
                let mut args = Vec::new();
                for a in &n.children {
                    args.extend(self.visit(a).pieces());
                }
                Out::keep(Node::new(n.id, n.kind, None, args), vec![])
            }
            NodeKind::Case => self.case(n),
            NodeKind::Switch => self.switch(n),
            NodeKind::If => self.if_stmt(n),
            NodeKind::While => {
                let cond = self.visit(&n.children[0]);
                let body = n.children.get(1).map(|b| self.visit(b));
                let Some(c) = cond.node else {
                    let mut d = cond.dangling;
                    d.extend(body.into_iter().flat_map(Out::pieces));
                    return Out::gone(d);
                };
                let mut dangling = cond.dangling;
                let mut children = vec![c];
                if let Some(b) = body {
                    children.extend(b.node);
                    dangling.extend(b.dangling);
                }
                Out::keep(Node::new(n.id, n.kind, None, children), dangling)
            }
            NodeKind::For => {
                let parts: Vec<Out> = n.children.iter().map(|c| self.visit(c)).collect();
                if parts[..3].iter().any(|p| p.node.is_none()) {
                    return Out::gone(parts.into_iter().flat_map(Out::pieces).collect());
                }
                let mut children = Vec::new();
                let mut dangling = Vec::new();
                for p in parts {
                    children.extend(p.node);
                    dangling.extend(p.dangling);
                }
                Out::keep(Node::new(n.id, n.kind, None, children), dangling)
            }
            NodeKind::Return => {
                let mut children = Vec::new();
                let mut dangling = Vec::new();
                if let Some(e) = n.children.first() {
                    let o = self.visit(e);
                    children.extend(o.node);
                    dangling = o.dangling;
                }
                Out::keep(Node::new(n.id, n.kind, None, children), dangling)
            }
            NodeKind::ExprStmt | NodeKind::UnaryOp => {
                let o = self.visit(&n.children[0]);
                match o.node {
                    Some(e) => Out::keep(Node::new(n.id, n.kind, n.value.clone(), vec![e]), o.dangling),
                    None => Out::gone(o.dangling),
                }
            }
            NodeKind::VarDecl => self.var_decl(n),
            NodeKind::Assign => {
                let target = self.visit(&n.children[0]);
                let value = self.visit(&n.children[1]);
                match (target.node, value.node) {
                    (Some(t), Some(v)) => {
                        let mut d = target.dangling;
                        d.extend(value.dangling);
                        Out::keep(Node::new(n.id, n.kind, n.value.clone(), vec![t, v]), d)
                    }
                    (t, v) => {
                        let mut d: Vec<Node> = t.into_iter().chain(target.dangling).collect();
                        d.extend(v.into_iter().chain(value.dangling));
                        Out::gone(d)
                    }
                }
            }
            NodeKind::Call => {
                let callee = self.visit(&n.children[0]);
                let args = self.visit(&n.children[1]);
                match (callee.node, args.node) {
                    (Some(c), Some(a)) => {
                        let mut d = callee.dangling;
                        d.extend(args.dangling);
                        Out::keep(Node::new(n.id, n.kind, None, vec![c, a]), d)
                    }
                    (c, a) => {
                        let mut d: Vec<Node> = c.into_iter().chain(callee.dangling).collect();
                        d.extend(a.map(|a| a.children).unwrap_or_default());
                        d.extend(args.dangling);
                        Out::gone(d)
                    }
                }
            }
            NodeKind::FieldAccess | NodeKind::BinaryOp => {
                let l = self.visit(&n.children[0]);
                let r = self.visit(&n.children[1]);
                let mut d = l.dangling;
                d.extend(r.dangling);
                match (l.node, r.node) {
                    (Some(a), Some(b)) => Out::keep(Node::new(n.id, n.kind, n.value.clone(), vec![a, b]), d),
                    (Some(one), None) | (None, Some(one)) => Out::keep(one, d),
                    (None, None) => Out::gone(d),
                }
            }
            NodeKind::Method | NodeKind::ParamList | NodeKind::Param => Out::keep(n.clone(), vec![]),
        }
    }

    fn var_decl(&mut self, n: &Node) -> Out {
        let ty = self.visit(&n.children[0]).node;
        let name = self.visit(&n.children[1]).node;
        let init = n.children.get(2).map(|e| self.visit(e));
        let (init_node, mut dangling) = match init {
            Some(o) => (o.node, o.dangling),
            None => (None, vec![]),
        };
        match (ty, name) {
            (Some(t), Some(nm)) => {
                let mut children = vec![t, nm];
                children.extend(init_node);
                Out::keep(Node::new(n.id, n.kind, None, children), dangling)
            }
            // without its type the declaration reads as a plain assignment
            (None, Some(nm)) => match init_node {
                Some(e) => Out::keep(Node::new(n.id, NodeKind::Assign, Some("=".into()), vec![nm, e]), dangling),
                None => Out::keep(Node::new(n.id, NodeKind::ExprStmt, None, vec![nm]), dangling),
            },
            (_, None) => {
                let mut d: Vec<Node> = init_node.into_iter().collect();
                d.append(&mut dangling);
                Out::gone(d)
            }
        }
    }

    fn if_stmt(&mut self, n: &Node) -> Out {
        let cond = self.visit(&n.children[0]);
        let then = n.children.get(1).map(|b| self.visit(b));
        let alt = n.children.get(2).map(|b| self.visit(b));
        let Some(c) = cond.node else {
            let mut d = cond.dangling;
            d.extend(then.into_iter().flat_map(Out::pieces));
            d.extend(alt.into_iter().flat_map(Out::pieces));
            return Out::gone(d);
        };
        let mut dangling = cond.dangling;
        let mut children = vec![c];
        let then_node = then.map(|t| {
            dangling.extend(t.dangling);
            t.node
        });
        let alt_node = match alt {
            None => None,
            Some(Out { node: Some(a), dangling: d }) => {
                if a.kind == NodeKind::If && !d.is_empty() {
                    // pieces of a repaired else-if stay in the else branch
                    let id = self.fresh();
                    let mut stmts = vec![a];
                    stmts.extend(self.statements(d));
                    Some(Node::new(id, NodeKind::Block, None, stmts))
                } else {
                    dangling.extend(d);
                    Some(a)
                }
            }
            Some(Out { node: None, dangling: d }) => {
                let stmts = self.statements(d);
                (!stmts.is_empty()).then(|| Node::new(self.fresh(), NodeKind::Block, None, stmts))
            }
        };
        match (then_node.flatten(), alt_node) {
            (Some(t), Some(a)) => children.extend([t, a]),
            (Some(t), None) => children.push(t),
            (None, Some(a)) => children.extend([Node::new(self.fresh(), NodeKind::Block, None, vec![]), a]),
            (None, None) => {}
        }
        Out::keep(Node::new(n.id, n.kind, None, children), dangling)
    }

    fn case(&mut self, n: &Node) -> Out {
        if n.value() == "default" {
            let stmts = self.statement_list(&n.children);
            return Out::keep(Node::new(n.id, n.kind, n.value.clone(), stmts), vec![]);
        }
        let label = self.visit(&n.children[0]);
        let mut stmts = self.statements(label.dangling);
        stmts.extend(self.statement_list(&n.children[1..]));
        match label.node {
            Some(l) => {
                let mut children = vec![l];
                children.extend(stmts);
                Out::keep(Node::new(n.id, n.kind, n.value.clone(), children), vec![])
            }
            None => Out::gone(stmts),
        }
    }

    fn switch(&mut self, n: &Node) -> Out {
        let expr = self.visit(&n.children[0]);
        let cases: Vec<Out> = n.children[1..].iter().map(|c| self.visit(c)).collect();
        let Some(e) = expr.node else {
            let mut d = expr.dangling;
            d.extend(cases.into_iter().flat_map(Out::pieces));
            return Out::gone(d);
        };
        let mut children = vec![e];
        let mut dangling = expr.dangling;
        for c in cases {
            children.extend(c.node);
            dangling.extend(c.dangling);
        }
        Out::keep(Node::new(n.id, n.kind, None, children), dangling)
    }
}

//! Program subtraction `P \ F`.
//!
//! Each fragment statement is located in the program by an ordered tree
//! embedding: kinds and values agree, fixed-role children line up by
//! position (a fragment may omit trailing optional children), and list
//! children (statements, arguments, cases) map to an ordered subsequence.
//! A fragment expression may also skip over an operator or field access in
//! the program, which is how fragments shrunk by collapsing still locate,
//! and an assignment may match a declaration with an initializer.
//! The first match in preorder wins. Matched nodes are removed through
//! [`remove_nodes`], which re-homes everything the fragment did not cover.

use std::collections::HashSet;

use super::ast::{Ast, Node, NodeId, NodeKind};
use super::edit::remove_nodes;
use super::serialize::serialize_node;
use super::LangError;
use crate::OOV;

pub fn subtract(program: &Ast, fragment: &Ast) -> Result<Ast, LangError> {
    subtract_statements(program, &fragment.body().children)
}

pub fn subtract_statements(program: &Ast, statements: &[Node]) -> Result<Ast, LangError> {
    let mut current = program.clone();
    for stmt in statements {
        let image = locate(&current, stmt)
            .ok_or_else(|| LangError::SubtreeNotFound { statement: serialize_node(stmt) })?;
        current = remove_nodes(&current, &image);
    }
    Ok(current)
}

/// Node ids of the leftmost-in-preorder embedding of `stmt` in the body.
pub fn locate(program: &Ast, stmt: &Node) -> Option<HashSet<NodeId>> {
    for p in candidates(program.body()) {
        if let Some(ids) = embed(stmt, p) {
            return Some(ids.into_iter().collect());
        }
        if stmt.kind == NodeKind::ExprStmt && p.kind.is_expression() {
            if let Some(ids) = embed(&stmt.children[0], p) {
                return Some(ids.into_iter().collect());
            }
        }
    }
    None
}

/// Preorder over the body, skipping declaration type names.
fn candidates(body: &Node) -> Vec<&Node> {
    fn go<'a>(n: &'a Node, out: &mut Vec<&'a Node>) {
        out.push(n);
        for (i, c) in n.children.iter().enumerate() {
            if n.kind == NodeKind::VarDecl && i == 0 {
                continue;
            }
            go(c, out);
        }
    }
    let mut out = Vec::new();
    for s in &body.children {
        go(s, &mut out);
    }
    out
}

fn value_matches(f: &Node, p: &Node) -> bool {
    if f.kind.is_leaf_kind() && f.value() == OOV {
        return p.kind.is_leaf_kind();
    }
    f.kind == p.kind && f.value == p.value
}

/// Embedding of `f` rooted at `p`; returns the matched program ids.
fn embed(f: &Node, p: &Node) -> Option<Vec<NodeId>> {
    if value_matches(f, p) {
        if let Some(mut ids) = embed_children(f, p) {
            ids.push(p.id);
            return Some(ids);
        }
    }
    // a declaration that lost its type reads as an assignment
    if f.kind == NodeKind::Assign && p.kind == NodeKind::VarDecl && p.children.len() == 3 {
        let mut ids = embed(&f.children[0], &p.children[1])?;
        ids.extend(embed(&f.children[1], &p.children[2])?);
        ids.push(p.id);
        return Some(ids);
    }
    // skip an operator / field access / grouping the fragment lost
    if f.kind.is_expression() && matches!(p.kind, NodeKind::FieldAccess | NodeKind::BinaryOp | NodeKind::UnaryOp) {
        return p.children.iter().find_map(|c| embed(f, c));
    }
    None
}

fn embed_children(f: &Node, p: &Node) -> Option<Vec<NodeId>> {
    // fixed-role prefix, then an ordered list
    let fixed = match f.kind {
        NodeKind::Block | NodeKind::ArgList => 0,
        NodeKind::Switch => 1,
        NodeKind::Case if f.value() == "case" => 1,
        NodeKind::Case => 0,
        _ => usize::MAX,
    };
    if fixed == usize::MAX {
        if f.children.len() > p.children.len() {
            return None;
        }
        let mut ids = Vec::new();
        for (fc, pc) in f.children.iter().zip(&p.children) {
            ids.extend(embed(fc, pc)?);
        }
        return Some(ids);
    }
    if f.children.len() < fixed || p.children.len() < fixed {
        return None;
    }
    let mut ids = Vec::new();
    for (fc, pc) in f.children[..fixed].iter().zip(&p.children[..fixed]) {
        ids.extend(embed(fc, pc)?);
    }
    let rest = if matches!(f.kind, NodeKind::Block | NodeKind::Case) {
        embed_statements(&f.children[fixed..], &nested_statements(&p.children[fixed..]), 0)?
    } else {
        embed_list(&f.children[fixed..], &p.children[fixed..])?
    };
    ids.extend(rest);
    Some(ids)
}

/// Statements of a list and, in preorder, every statement nested in their
/// blocks; each paired with the index just past its own subtree.
fn nested_statements(ps: &[Node]) -> Vec<(&Node, usize)> {
    fn go<'a>(n: &'a Node, out: &mut Vec<(&'a Node, usize)>) {
        let at = out.len();
        out.push((n, 0));
        for (i, c) in n.children.iter().enumerate() {
            match c.kind {
                NodeKind::Block | NodeKind::Case => c.children.iter().filter(|s| s.kind.is_statement()).for_each(|s| go(s, out)),
                NodeKind::If if n.kind == NodeKind::If && i == 2 => go(c, out),
                _ => {}
            }
        }
        out[at].1 = out.len();
    }
    let mut out = Vec::new();
    for p in ps {
        go(p, &mut out);
    }
    out
}

/// A statement list embeds into a block at any depth: reduction hoists
/// statements out of predicates it did not keep.
fn embed_statements(fs: &[Node], flat: &[(&Node, usize)], from: usize) -> Option<Vec<NodeId>> {
    let Some((first, rest)) = fs.split_first() else {
        return Some(Vec::new());
    };
    for i in from..flat.len() {
        if let Some(mut ids) = embed(first, flat[i].0) {
            if let Some(more) = embed_statements(rest, flat, flat[i].1) {
                ids.extend(more);
                return Some(ids);
            }
        }
        // as at the top level, `e;` may be an expression inside a statement
        if first.kind != NodeKind::ExprStmt {
            continue;
        }
        for e in own_expressions(flat[i].0) {
            if let Some(mut ids) = embed(&first.children[0], e) {
                if let Some(more) = embed_statements(rest, flat, i + 1) {
                    ids.extend(more);
                    return Some(ids);
                }
            }
        }
    }
    None
}

/// Expressions of a statement, preorder, leaving out the statements nested
/// in it and declaration type names.
fn own_expressions(n: &Node) -> Vec<&Node> {
    fn go<'a>(n: &'a Node, out: &mut Vec<&'a Node>) {
        if n.kind.is_expression() {
            out.push(n);
        }
        for (i, c) in n.children.iter().enumerate() {
            let nested = matches!(c.kind, NodeKind::Block | NodeKind::Case) || (n.kind == NodeKind::If && i == 2);
            if !nested && !(n.kind == NodeKind::VarDecl && i == 0) {
                go(c, out);
            }
        }
    }
    let mut out = Vec::new();
    go(n, &mut out);
    out
}

fn embed_list(fs: &[Node], ps: &[Node]) -> Option<Vec<NodeId>> {
    let Some((first, rest)) = fs.split_first() else {
        return Some(Vec::new());
    };
    for (i, p) in ps.iter().enumerate() {
        if let Some(mut ids) = embed(first, p) {
            if let Some(more) = embed_list(rest, &ps[i + 1..]) {
                ids.extend(more);
                return Some(ids);
            }
        }
    }
    None
}

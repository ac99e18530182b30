use serde::{Deserialize, Serialize};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Method,
    ParamList,
    Param,
    Block,
    If,
    While,
    For,
    Switch,
    Case,
    Return,
    ExprStmt,
    VarDecl,
    Assign,
    Call,
    ArgList,
    FieldAccess,
    Identifier,
    Literal,
    BinaryOp,
    UnaryOp,
}

impl NodeKind {
    pub fn is_statement(self) -> bool {
        use NodeKind::*;
        matches!(self, If | While | For | Switch | Return | ExprStmt | VarDecl | Assign)
    }

    pub fn is_control(self) -> bool {
        matches!(self, NodeKind::If | NodeKind::While | NodeKind::For | NodeKind::Switch)
    }

    pub fn is_expression(self) -> bool {
        use NodeKind::*;
        matches!(self, Call | FieldAccess | Identifier | Literal | BinaryOp | UnaryOp)
    }

    pub fn is_leaf_kind(self) -> bool {
        matches!(self, NodeKind::Identifier | NodeKind::Literal)
    }
}

/// Value of a `UnaryOp` that stands for a parenthesised sub-expression.
pub const GROUP: &str = "()";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub value: Option<String>,
    pub children: Vec<Node>,
}

impl Node {
    pub fn new(id: NodeId, kind: NodeKind, value: Option<String>, children: Vec<Node>) -> Self {
        Node { id, kind, value, children }
    }

    pub fn leaf(id: NodeId, kind: NodeKind, value: impl Into<String>) -> Self {
        Node { id, kind, value: Some(value.into()), children: Vec::new() }
    }

    pub fn value(&self) -> &str {
        self.value.as_deref().unwrap_or("")
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(Node::count).sum::<usize>()
    }

    pub fn max_id(&self) -> NodeId {
        self.children.iter().map(Node::max_id).fold(self.id, NodeId::max)
    }

    pub fn find(&self, id: NodeId) -> Option<&Node> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    pub fn find_mut(&mut self, id: NodeId) -> Option<&mut Node> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter_mut().find_map(|c| c.find_mut(id))
    }

    pub fn preorder(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        fn go<'a>(n: &'a Node, out: &mut Vec<&'a Node>) {
            out.push(n);
            for c in &n.children {
                go(c, out);
            }
        }
        go(self, &mut out);
        out
    }

    /// Kind/value/shape equality, ignoring ids.
    pub fn same_shape(&self, other: &Node) -> bool {
        self.kind == other.kind
            && self.value == other.value
            && self.children.len() == other.children.len()
            && self.children.iter().zip(&other.children).all(|(a, b)| a.same_shape(b))
    }

    /// Give every node a fresh id, in preorder, starting at `next`.
    pub fn renumber(&mut self, next: &mut NodeId) {
        self.id = *next;
        *next += 1;
        for c in &mut self.children {
            c.renumber(next);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ast {
    pub root: Node,
}

impl Ast {
    pub fn new(root: Node) -> Self {
        Ast { root }
    }

    /// The method body. Panics if the root is not a well-formed method.
    pub fn body(&self) -> &Node {
        self.root.children.last().expect("method has a body")
    }

    pub fn body_mut(&mut self) -> &mut Node {
        self.root.children.last_mut().expect("method has a body")
    }

    pub fn params(&self) -> &Node {
        &self.root.children[1]
    }

    pub fn name(&self) -> &str {
        self.root.value()
    }

    pub fn node_count(&self) -> usize {
        self.root.count()
    }

    pub fn body_node_count(&self) -> usize {
        self.body().count()
    }

    pub fn next_id(&self) -> NodeId {
        self.root.max_id() + 1
    }

    pub fn ids_unique(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.root.preorder().iter().all(|n| seen.insert(n.id))
    }

    /// Same method header with a different body.
    pub fn with_body(&self, statements: Vec<Node>, body_id: NodeId) -> Ast {
        let mut root = self.root.clone();
        *root.children.last_mut().expect("method has a body") =
            Node::new(body_id, NodeKind::Block, None, statements);
        Ast { root }
    }

    pub fn with_name(&self, name: &str) -> Ast {
        let mut root = self.root.clone();
        root.value = Some(name.to_string());
        Ast { root }
    }
}

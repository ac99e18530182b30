use super::ast::{Ast, Node, NodeId, NodeKind, GROUP};
use super::token::{tokenize, Token, TokenKind};

const INDENT: &str = "  ";

/// A serialized token together with the node that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwnedToken {
    pub kind: TokenKind,
    pub text: String,
    pub owner: NodeId,
}

pub fn serialize(ast: &Ast) -> String {
    let mut w = Writer::default();
    w.method(&ast.root);
    w.finish()
}

/// Body statements only, one per line.
pub fn serialize_statements(stmts: &[Node]) -> String {
    let mut w = Writer::default();
    for s in stmts {
        w.statement(s, 0);
    }
    w.finish()
}

pub fn serialize_node(node: &Node) -> String {
    let mut w = Writer::default();
    if node.kind.is_statement() {
        w.statement(node, 0);
    } else {
        w.expr(node);
    }
    w.finish()
}

/// Tokens of the serialized method, each tagged with its owning node.
/// Positions line up with `tokenize(serialize(ast))`.
pub fn owned_tokens(ast: &Ast) -> Vec<OwnedToken> {
    let mut w = Writer::default();
    w.method(&ast.root);
    w.tokens
}

pub fn owned_statement_tokens(stmts: &[Node]) -> Vec<OwnedToken> {
    let mut w = Writer::default();
    for s in stmts {
        w.statement(s, 0);
    }
    w.tokens
}

/// Nodes owning at least one non-punctuation token, in first-token order.
/// These are the units structural deletion works on: every lexeme belongs
/// to exactly one, and a multi-token type name is a single unit.
pub fn lexeme_owners(stmts: &[Node]) -> Vec<NodeId> {
    let mut seen = std::collections::HashSet::new();
    owned_statement_tokens(stmts)
        .into_iter()
        .filter(|t| t.kind != TokenKind::Punct && seen.insert(t.owner))
        .map(|t| t.owner)
        .collect()
}

pub fn statement_tokens(stmts: &[Node]) -> Vec<Token> {
    owned_statement_tokens(stmts)
        .into_iter()
        .enumerate()
        .map(|(position, t)| Token { kind: t.kind, text: t.text, position })
        .collect()
}

#[derive(Default)]
struct Writer {
    lines: Vec<String>,
    line: String,
    tokens: Vec<OwnedToken>,
    // next token sticks to the previous one (after a prefix operator)
    hug: bool,
}

fn classify(text: &str) -> TokenKind {
    // Every emitted text is a single lexeme; reuse the lexer for its kind.
    tokenize(text).ok().and_then(|t| t.into_iter().next()).map(|t| t.kind).unwrap_or(TokenKind::Identifier)
}

impl Writer {
    fn finish(mut self) -> String {
        if !self.line.is_empty() {
            self.lines.push(std::mem::take(&mut self.line));
        }
        self.lines.join("\n")
    }

    fn newline(&mut self) {
        self.lines.push(std::mem::take(&mut self.line));
    }

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.line.push_str(INDENT);
        }
    }

    fn raw(&mut self, text: &str, owner: NodeId, space: bool) {
        if space && !self.hug && !self.line.trim_start().is_empty() && !self.line.ends_with('(') {
            self.line.push(' ');
        }
        self.hug = false;
        self.line.push_str(text);
        // Type names like `List<Obj>` carry several lexemes in one leaf.
        match tokenize(text) {
            Ok(toks) if toks.len() > 1 => {
                self.tokens.extend(toks.into_iter().map(|t| OwnedToken { kind: t.kind, text: t.text, owner }))
            }
            _ => self.tokens.push(OwnedToken { kind: classify(text), text: text.to_string(), owner }),
        }
    }

    fn word(&mut self, text: &str, owner: NodeId) {
        self.raw(text, owner, true);
    }

    fn glue(&mut self, text: &str, owner: NodeId) {
        self.raw(text, owner, false);
    }

    fn method(&mut self, m: &Node) {
        let [ret, params, body] = &m.children[..] else {
            panic!("malformed method node");
        };
        self.word(ret.value(), ret.id);
        self.word(m.value(), m.id);
        self.glue("(", params.id);
        for (i, p) in params.children.iter().enumerate() {
            if i > 0 {
                self.glue(",", params.id);
            }
            self.word(p.children[0].value(), p.children[0].id);
            self.word(p.children[1].value(), p.children[1].id);
        }
        self.glue(")", params.id);
        self.block(body, 0);
    }

    /// ` {`, statements, `}` on its own line. Leaves the cursor after `}`.
    fn block(&mut self, b: &Node, depth: usize) {
        self.word("{", b.id);
        self.newline();
        for s in &b.children {
            self.statement(s, depth + 1);
        }
        self.indent(depth);
        self.glue("}", b.id);
    }

    fn statement(&mut self, s: &Node, depth: usize) {
        self.indent(depth);
        self.statement_inline(s, depth);
        self.newline();
    }

    fn statement_inline(&mut self, s: &Node, depth: usize) {
        match s.kind {
            NodeKind::If => self.if_chain(s, depth),
            NodeKind::While => {
                self.word("while", s.id);
                self.paren(&s.children[0], s.id);
                self.control_body(s.children.get(1), s.id, depth);
            }
            NodeKind::For => {
                self.word("for", s.id);
                self.glue("(", s.id);
                self.simple(&s.children[0]);
                self.glue(";", s.id);
                self.expr(&s.children[1]);
                self.glue(";", s.id);
                self.simple(&s.children[2]);
                self.glue(")", s.id);
                self.control_body(s.children.get(3), s.id, depth);
            }
            NodeKind::Switch => {
                self.word("switch", s.id);
                self.paren(&s.children[0], s.id);
                self.word("{", s.id);
                self.newline();
                for case in &s.children[1..] {
                    self.indent(depth + 1);
                    let stmts = if case.value() == "default" {
                        self.word("default", case.id);
                        &case.children[..]
                    } else {
                        self.word("case", case.id);
                        self.expr(&case.children[0]);
                        &case.children[1..]
                    };
                    self.glue(":", case.id);
                    self.newline();
                    for st in stmts {
                        self.statement(st, depth + 2);
                    }
                }
                self.indent(depth);
                self.glue("}", s.id);
            }
            NodeKind::Return => {
                self.word("return", s.id);
                if let Some(e) = s.children.first() {
                    self.expr(e);
                }
                self.glue(";", s.id);
            }
            NodeKind::ExprStmt | NodeKind::VarDecl | NodeKind::Assign => {
                self.simple(s);
                self.glue(";", s.id);
            }
            // Expressions re-homed into a statement list print as `e;`.
            k if k.is_expression() => {
                self.expr(s);
                self.glue(";", s.id);
            }
            k => panic!("{k:?} is not a statement"),
        }
    }

    fn if_chain(&mut self, s: &Node, depth: usize) {
        self.word("if", s.id);
        self.paren(&s.children[0], s.id);
        self.control_body(s.children.get(1), s.id, depth);
        if let Some(alt) = s.children.get(2) {
            self.word("else", s.id);
            if alt.kind == NodeKind::If {
                self.if_chain(alt, depth);
            } else {
                self.block(alt, depth);
            }
        }
    }

    fn control_body(&mut self, body: Option<&Node>, owner: NodeId, depth: usize) {
        match body {
            Some(b) => self.block(b, depth),
            None => self.glue(";", owner),
        }
    }

    fn paren(&mut self, e: &Node, owner: NodeId) {
        self.glue("(", owner);
        self.expr(e);
        self.glue(")", owner);
    }

    /// Declaration / assignment / expression without the terminator.
    fn simple(&mut self, s: &Node) {
        match s.kind {
            NodeKind::VarDecl => {
                self.word(s.children[0].value(), s.children[0].id);
                self.word(s.children[1].value(), s.children[1].id);
                if let Some(init) = s.children.get(2) {
                    self.word("=", s.id);
                    self.expr(init);
                }
            }
            NodeKind::Assign => {
                self.expr(&s.children[0]);
                self.word(s.value(), s.id);
                self.expr(&s.children[1]);
            }
            NodeKind::ExprStmt => self.expr(&s.children[0]),
            _ => self.expr(s),
        }
    }

    fn expr(&mut self, e: &Node) {
        match e.kind {
            NodeKind::Identifier | NodeKind::Literal => self.word(e.value(), e.id),
            NodeKind::FieldAccess => {
                self.expr(&e.children[0]);
                self.glue(".", e.id);
                let field = &e.children[1];
                self.glue(field.value(), field.id);
            }
            NodeKind::Call => {
                self.expr(&e.children[0]);
                let args = &e.children[1];
                self.glue("(", args.id);
                for (i, a) in args.children.iter().enumerate() {
                    if i > 0 {
                        self.glue(",", args.id);
                    }
                    self.expr(a);
                }
                self.glue(")", args.id);
            }
            NodeKind::BinaryOp => {
                self.expr(&e.children[0]);
                self.word(e.value(), e.id);
                self.expr(&e.children[1]);
            }
            NodeKind::UnaryOp if e.value() == GROUP => {
                self.word("(", e.id);
                self.expr(&e.children[0]);
                self.glue(")", e.id);
            }
            NodeKind::UnaryOp => {
                self.word(e.value(), e.id);
                self.hug = true;
                self.expr(&e.children[0]);
            }
            k => panic!("{k:?} is not an expression"),
        }
    }
}

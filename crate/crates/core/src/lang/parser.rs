use super::ast::{Ast, Node, NodeKind, GROUP};
use super::token::{tokenize, Token, TokenKind, LITERAL_KEYWORDS, TYPE_KEYWORDS};
use super::LangError;

const ASSIGN_OPS: &[&str] = &["=", "+=", "-=", "*=", "/="];

// Binary precedence levels, loosest first.
const LEVELS: &[&[&str]] = &[
    &["||"],
    &["&&"],
    &["==", "!="],
    &["<", ">", "<=", ">="],
    &["+", "-"],
    &["*", "/", "%"],
];

pub fn parse(source: &str) -> Result<Ast, LangError> {
    let tokens = tokenize(source)?;
    parse_tokens(&tokens)
}

pub fn parse_tokens(tokens: &[Token]) -> Result<Ast, LangError> {
    let mut p = Parser { toks: tokens, pos: 0, best: None };
    let mut root = p.method().map_err(|_| p.error())?;
    if p.pos != tokens.len() {
        p.fail::<()>(&["end of input"]).ok();
        return Err(p.error());
    }
    let mut next = 0;
    root.renumber(&mut next);
    Ok(Ast::new(root))
}

/// Parse a statement list (a method body without its braces).
pub fn parse_statements(source: &str) -> Result<Vec<Node>, LangError> {
    let ast = parse(&format!("void f() {{ {source} }}"))?;
    Ok(ast.body().children.clone())
}

struct Fail;
type PResult<T> = Result<T, Fail>;

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    // furthest failure seen, for error reporting after backtracking
    best: Option<(usize, Vec<String>)>,
}

fn n(kind: NodeKind, value: Option<String>, children: Vec<Node>) -> Node {
    Node::new(0, kind, value, children)
}

impl<'a> Parser<'a> {
    fn error(&self) -> LangError {
        let (position, expected) = self.best.clone().unwrap_or((self.pos, vec![]));
        let found = self.toks.get(position).map(|t| t.text.clone());
        LangError::Parse { position, expected, found }
    }

    fn fail<T>(&mut self, expected: &[&str]) -> PResult<T> {
        let here = self.pos;
        match &mut self.best {
            Some((p, exp)) if *p == here => {
                for e in expected {
                    if !exp.iter().any(|x| x == e) {
                        exp.push(e.to_string());
                    }
                }
            }
            Some((p, _)) if *p > here => {}
            _ => self.best = Some((here, expected.iter().map(|s| s.to_string()).collect())),
        }
        Err(Fail)
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek_text(&self) -> &'a str {
        self.peek().map(|t| t.text.as_str()).unwrap_or("")
    }

    fn at(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.text == text && t.kind != TokenKind::StringLiteral)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.at(text) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            self.fail(&[text])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.pos += 1;
                Ok(t.text.clone())
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn type_text(&mut self) -> PResult<String> {
        let base = match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => t.text.clone(),
            Some(t) if t.kind == TokenKind::Keyword && TYPE_KEYWORDS.contains(&t.text.as_str()) => {
                t.text.clone()
            }
            _ => return self.fail(&["type"]),
        };
        self.pos += 1;
        if !self.eat("<") {
            return Ok(base);
        }
        let mut args = vec![self.type_text()?];
        while self.eat(",") {
            args.push(self.type_text()?);
        }
        self.expect(">")?;
        Ok(format!("{base}<{}>", args.join(", ")))
    }

    fn method(&mut self) -> PResult<Node> {
        let ret = self.type_text()?;
        let name = self.ident()?;
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.at(")") {
            loop {
                let ty = self.type_text()?;
                let pname = self.ident()?;
                params.push(n(
                    NodeKind::Param,
                    None,
                    vec![n(NodeKind::Identifier, Some(ty), vec![]), n(NodeKind::Identifier, Some(pname), vec![])],
                ));
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let body = self.block()?;
        Ok(n(
            NodeKind::Method,
            Some(name),
            vec![n(NodeKind::Identifier, Some(ret), vec![]), n(NodeKind::ParamList, None, params), body],
        ))
    }

    fn block(&mut self) -> PResult<Node> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.at("}") {
            if self.peek().is_none() {
                return self.fail(&["}"]);
            }
            stmts.push(self.statement()?);
        }
        self.pos += 1;
        Ok(n(NodeKind::Block, None, stmts))
    }

    /// Body of a control statement: a block, or `;` for the body-less form.
    fn control_body(&mut self) -> PResult<Option<Node>> {
        if self.eat(";") {
            Ok(None)
        } else if self.at("{") {
            self.block().map(Some)
        } else {
            self.fail(&["{", ";"])
        }
    }

    fn paren_expr(&mut self) -> PResult<Node> {
        self.expect("(")?;
        let e = self.expr()?;
        self.expect(")")?;
        Ok(e)
    }

    fn statement(&mut self) -> PResult<Node> {
        match self.peek_text() {
            "if" => self.if_stmt(),
            "while" => {
                self.pos += 1;
                let cond = self.paren_expr()?;
                let mut children = vec![cond];
                children.extend(self.control_body()?);
                Ok(n(NodeKind::While, None, children))
            }
            "for" => {
                self.pos += 1;
                self.expect("(")?;
                let init = self.simple()?;
                self.expect(";")?;
                let cond = self.expr()?;
                self.expect(";")?;
                let update = self.simple()?;
                self.expect(")")?;
                let mut children = vec![init, cond, update];
                children.extend(self.control_body()?);
                Ok(n(NodeKind::For, None, children))
            }
            "switch" => self.switch_stmt(),
            "return" => {
                self.pos += 1;
                let mut children = Vec::new();
                if !self.at(";") {
                    children.push(self.expr()?);
                }
                self.expect(";")?;
                Ok(n(NodeKind::Return, None, children))
            }
            _ => {
                let s = self.simple()?;
                self.expect(";")?;
                Ok(s)
            }
        }
    }

    fn if_stmt(&mut self) -> PResult<Node> {
        self.expect("if")?;
        let cond = self.paren_expr()?;
        let mut children = vec![cond];
        match self.control_body()? {
            None => return Ok(n(NodeKind::If, None, children)),
            Some(b) => children.push(b),
        }
        if self.eat("else") {
            if self.at("if") {
                children.push(self.if_stmt()?);
            } else {
                children.push(self.block()?);
            }
        }
        Ok(n(NodeKind::If, None, children))
    }

    fn switch_stmt(&mut self) -> PResult<Node> {
        self.expect("switch")?;
        let mut children = vec![self.paren_expr()?];
        self.expect("{")?;
        loop {
            let mut case = if self.eat("case") {
                let label = self.expr()?;
                n(NodeKind::Case, Some("case".into()), vec![label])
            } else if self.eat("default") {
                n(NodeKind::Case, Some("default".into()), vec![])
            } else if self.eat("}") {
                break;
            } else {
                return self.fail(&["case", "default", "}"]);
            };
            self.expect(":")?;
            while !self.at("case") && !self.at("default") && !self.at("}") {
                if self.peek().is_none() {
                    return self.fail(&["}"]);
                }
                case.children.push(self.statement()?);
            }
            children.push(case);
        }
        Ok(n(NodeKind::Switch, None, children))
    }

    fn try_var_decl(&mut self) -> Option<Node> {
        let save = self.pos;
        let best = self.best.clone();
        let decl = (|| {
            let ty = self.type_text()?;
            let name = self.ident()?;
            Ok::<_, Fail>((ty, name))
        })();
        match decl {
            Ok((ty, name)) if self.at("=") || self.at(";") || self.at(")") => {
                let mut children =
                    vec![n(NodeKind::Identifier, Some(ty), vec![]), n(NodeKind::Identifier, Some(name), vec![])];
                if self.eat("=") {
                    match self.expr() {
                        Ok(e) => children.push(e),
                        Err(_) => {
                            // genuine error inside the initializer; keep the report
                            self.pos = save;
                            return None;
                        }
                    }
                }
                Some(n(NodeKind::VarDecl, None, children))
            }
            _ => {
                self.pos = save;
                self.best = best;
                None
            }
        }
    }

    /// Declaration, assignment, or bare expression (no terminator).
    fn simple(&mut self) -> PResult<Node> {
        if let Some(decl) = self.try_var_decl() {
            return Ok(decl);
        }
        let target = self.expr()?;
        if let Some(op) = ASSIGN_OPS.iter().find(|op| self.at(op)) {
            self.pos += 1;
            let value = self.expr()?;
            return Ok(n(NodeKind::Assign, Some(op.to_string()), vec![target, value]));
        }
        Ok(n(NodeKind::ExprStmt, None, vec![target]))
    }

    fn expr(&mut self) -> PResult<Node> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> PResult<Node> {
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(op) = LEVELS[level].iter().find(|op| self.at_operator(op)) {
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            lhs = n(NodeKind::BinaryOp, Some(op.to_string()), vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn at_operator(&self, op: &str) -> bool {
        self.peek().is_some_and(|t| t.kind == TokenKind::Operator && t.text == op)
    }

    fn unary(&mut self) -> PResult<Node> {
        for op in ["!", "-"] {
            if self.at_operator(op) {
                self.pos += 1;
                let operand = self.unary()?;
                return Ok(n(NodeKind::UnaryOp, Some(op.into()), vec![operand]));
            }
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Node> {
        let mut e = self.primary()?;
        loop {
            if self.eat(".") {
                let field = self.ident()?;
                e = n(NodeKind::FieldAccess, None, vec![e, n(NodeKind::Identifier, Some(field), vec![])]);
            } else if self.eat("(") {
                let mut args = Vec::new();
                if !self.at(")") {
                    loop {
                        args.push(self.expr()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
                e = n(NodeKind::Call, None, vec![e, n(NodeKind::ArgList, None, args)]);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Node> {
        let Some(t) = self.peek() else {
            return self.fail(&["expression"]);
        };
        match t.kind {
            TokenKind::Identifier => {
                self.pos += 1;
                Ok(n(NodeKind::Identifier, Some(t.text.clone()), vec![]))
            }
            TokenKind::NumberLiteral | TokenKind::StringLiteral => {
                self.pos += 1;
                Ok(n(NodeKind::Literal, Some(t.text.clone()), vec![]))
            }
            TokenKind::Keyword if LITERAL_KEYWORDS.contains(&t.text.as_str()) => {
                self.pos += 1;
                Ok(n(NodeKind::Literal, Some(t.text.clone()), vec![]))
            }
            TokenKind::Punct if t.text == "(" => {
                let inner = self.paren_expr()?;
                Ok(n(NodeKind::UnaryOp, Some(GROUP.into()), vec![inner]))
            }
            _ => self.fail(&["expression"]),
        }
    }
}

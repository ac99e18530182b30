//! The mini-language: lexing, parsing, printing, and the tree algebra the
//! search procedures are built on.

mod ast;
mod augment;
mod edit;
mod flatten;
mod parser;
mod serialize;
mod subtract;
mod token;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{Ast, Node, NodeId, NodeKind, GROUP};
pub use augment::{augment, AugmentedAst, EdgeKind, SemanticEdge};
pub use edit::{as_statements, remove_nodes};
pub use flatten::{flatten, Branch, Statement};
pub use parser::{parse, parse_statements, parse_tokens};
pub use serialize::{
    lexeme_owners, owned_statement_tokens, owned_tokens, serialize, serialize_node, serialize_statements, statement_tokens,
    OwnedToken,
};
pub use subtract::{locate, subtract, subtract_statements};
pub use token::{embed, is_constituent, is_subsequence, join, lexemes, texts, tokenize, Token, TokenKind};

/// A small list-adapter method used throughout the docs and tests.
pub const RUNNING_EXAMPLE: &str = r#"void addItem(int position) {
  List<Obj> mItems = retQueue();
  if(position > mItems.size()) {
    return;
  }
  mItems.add(position, genItem());
  notifyItemInserted(position);
  log("Add item;");
}"#;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum LangError {
    #[error("unrecognized character at byte {offset}")]
    Lex { offset: usize },
    #[error("parse error at token {position} (found {found:?}); expected one of {expected:?}")]
    Parse { position: usize, expected: Vec<String>, found: Option<String> },
    #[error("fragment statement not found in program: {statement}")]
    SubtreeNotFound { statement: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub source: String,
    pub tokens: Vec<Token>,
    pub ast: Ast,
}

impl Program {
    pub fn parse(source: &str) -> Result<Program, LangError> {
        let tokens = tokenize(source)?;
        let ast = parse_tokens(&tokens)?;
        Ok(Program { source: source.to_string(), tokens, ast })
    }

    /// A program whose source is the canonical rendering of `ast`.
    pub fn from_ast(ast: Ast) -> Program {
        let source = serialize(&ast);
        let tokens = tokenize(&source).expect("serializer output lexes");
        Program { source, tokens, ast }
    }

    /// Tokens of the method body, without the enclosing braces.
    pub fn body_tokens(&self) -> Vec<Token> {
        statement_tokens(&self.ast.body().children)
    }
}

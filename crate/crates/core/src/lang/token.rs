use serde::{Deserialize, Serialize};

use super::LangError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    StringLiteral,
    NumberLiteral,
    Punct,
    Operator,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub position: usize,
}

impl Token {
    /// Tokens a model can "see" as a word: identifiers and keywords.
    pub fn is_word(&self) -> bool {
        matches!(self.kind, TokenKind::Identifier | TokenKind::Keyword)
    }

    pub fn is_literal(&self) -> bool {
        matches!(self.kind, TokenKind::StringLiteral | TokenKind::NumberLiteral)
            || (self.kind == TokenKind::Keyword && LITERAL_KEYWORDS.contains(&self.text.as_str()))
    }
}

pub const KEYWORDS: &[&str] = &[
    "void", "int", "boolean", "char", "byte", "short", "long", "float", "double", "if", "else",
    "while", "for", "switch", "case", "default", "return", "true", "false", "null",
];

pub const TYPE_KEYWORDS: &[&str] = &[
    "void", "int", "boolean", "char", "byte", "short", "long", "float", "double",
];

pub const LITERAL_KEYWORDS: &[&str] = &["true", "false", "null"];

// Longest first so that `==` wins over `=`.
const OPERATORS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "+=", "-=", "*=", "/=", "=", "<", ">", "+", "-", "*", "/",
    "%", "!",
];

const PUNCT: &[char] = &['(', ')', '{', '}', ';', ',', '.', ':'];

pub fn tokenize(source: &str) -> Result<Vec<Token>, LangError> {
    let bytes = source.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let push = |out: &mut Vec<Token>, kind, text: &str| {
        let position = out.len();
        out.push(Token { kind, text: text.to_string(), position });
    };
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if source[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if source[i..].starts_with("/*") {
            match source[i + 2..].find("*/") {
                Some(end) => i += end + 4,
                None => return Err(LangError::Lex { offset: i }),
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &source[start..i];
            let kind = if KEYWORDS.contains(&text) { TokenKind::Keyword } else { TokenKind::Identifier };
            push(&mut out, kind, text);
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            push(&mut out, TokenKind::NumberLiteral, &source[start..i]);
            continue;
        }
        if c == b'"' || c == b'\'' {
            let start = i;
            i += 1;
            loop {
                match bytes.get(i) {
                    None | Some(b'\n') => return Err(LangError::Lex { offset: start }),
                    Some(b'\\') => i += 2,
                    Some(&q) if q == c => {
                        i += 1;
                        break;
                    }
                    Some(_) => i += 1,
                }
            }
            push(&mut out, TokenKind::StringLiteral, &source[start..i]);
            continue;
        }
        if let Some(op) = OPERATORS.iter().find(|op| source[i..].starts_with(**op)) {
            push(&mut out, TokenKind::Operator, op);
            i += op.len();
            continue;
        }
        if PUNCT.contains(&(c as char)) {
            push(&mut out, TokenKind::Punct, &source[i..i + 1]);
            i += 1;
            continue;
        }
        return Err(LangError::Lex { offset: i });
    }
    Ok(out)
}

/// Exact subsequence test on token texts.
pub fn is_subsequence(candidate: &[Token], whole: &[Token]) -> bool {
    let mut it = whole.iter();
    candidate.iter().all(|c| it.any(|w| w.text == c.text))
}

/// Like [`is_subsequence`], but a candidate `oov` stands in for any
/// identifier or literal token of `whole`.
pub fn is_constituent(candidate: &[Token], whole: &[Token]) -> bool {
    embed(candidate, whole).is_some()
}

/// The tokens that carry content: everything but punctuation.
pub fn lexemes(tokens: &[Token]) -> Vec<Token> {
    tokens.iter().filter(|t| t.kind != TokenKind::Punct).cloned().collect()
}

/// Leftmost embedding of `candidate` into `whole`, oov-aware.
pub fn embed(candidate: &[Token], whole: &[Token]) -> Option<Vec<usize>> {
    let mut positions = Vec::with_capacity(candidate.len());
    let mut j = 0;
    for c in candidate {
        loop {
            let w = whole.get(j)?;
            j += 1;
            if w.text == c.text || (c.text == crate::OOV && (w.kind == TokenKind::Identifier || w.is_literal())) {
                positions.push(j - 1);
                break;
            }
        }
    }
    Some(positions)
}

pub fn texts(tokens: &[Token]) -> Vec<String> {
    tokens.iter().map(|t| t.text.clone()).collect()
}

/// Canonical single-space rendering; re-lexes to the same tokens.
pub fn join(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
}

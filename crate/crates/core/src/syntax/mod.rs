//! Lexing and declaration-level parsing of a Python 3 subset.
//!
//! The parser extracts what repository analysis needs: imports, class and
//! function declarations with signatures and docstrings, annotated
//! attributes, and identifier reference chains. Statements outside that
//! subset are kept as opaque line spans instead of failing the parse.

mod ast;
mod body;
mod lexer;
mod parser;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{
    Assignment, ClassDecl, FunctionDecl, IdentifierOccurrence, ImportDecl, ImportForm, LineSpan, LocalBinding,
    ModuleAst, ModulePath, ParamKind, Parameter,
};
pub use body::{body_tree, dedent, StmtNode};
pub use lexer::{is_keyword, normalize_newlines, reconstruct, tokenize, Token, TokenKind, KEYWORDS};
pub use parser::{function_line_count, parse_module};

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("lex error at {pos}: {reason}")]
pub struct LexError {
    pub pos: Pos,
    pub reason: String,
}

impl LexError {
    pub fn new(pos: Pos, reason: impl Into<String>) -> Self {
        LexError { pos, reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("parse error at {pos}: expected {expected}")]
    Parse { pos: Pos, expected: String },
}

impl SyntaxError {
    pub fn pos(&self) -> Pos {
        match self {
            SyntaxError::Lex(e) => e.pos,
            SyntaxError::Parse { pos, .. } => *pos,
        }
    }
}

//! Statement-level trees for function bodies.
//!
//! A body is parsed into statements classified by kind, each carrying its
//! non-layout tokens as leaves and its nested block as children. This is
//! the granularity used by syntax matching and by the completion linter's
//! well-formedness check.

use serde::Serialize;

use super::lexer::{normalize_newlines, tokenize, Token, TokenKind};
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct StmtNode {
    pub kind: String,
    pub leaves: Vec<String>,
    pub children: Vec<StmtNode>,
}

impl StmtNode {
    fn new(kind: &str) -> Self {
        StmtNode { kind: kind.to_string(), leaves: Vec::new(), children: Vec::new() }
    }

    /// Number of statements in the tree, excluding the root.
    pub fn statement_count(&self) -> usize {
        self.children.iter().map(|c| 1 + c.statement_count()).sum()
    }
}

/// Remove the common leading whitespace of all non-blank lines.
pub fn dedent(text: &str) -> String {
    let text = normalize_newlines(text);
    let margin: Option<&str> = text
        .split('\n')
        .filter(|l| !l.trim().is_empty())
        .map(|l| &l[..l.len() - l.trim_start().len()])
        .fold(None, |acc: Option<&str>, ws| match acc {
            None => Some(ws),
            Some(prev) => {
                let common = prev.chars().zip(ws.chars()).take_while(|(a, b)| a == b).count();
                Some(&prev[..common])
            }
        });
    let margin = margin.unwrap_or("");
    if margin.is_empty() {
        return text;
    }
    text.split('\n').map(|l| l.strip_prefix(margin).unwrap_or(l.trim_start())).collect::<Vec<_>>().join("\n")
}

/// Parse a function body (any common indentation is removed first) into a
/// tree rooted at a `body` node.
pub fn body_tree(text: &str) -> Result<StmtNode, SyntaxError> {
    let src = dedent(text);
    let tokens: Vec<Token> = tokenize(&src)?.into_iter().filter(|t| t.kind != TokenKind::Comment).collect();
    let mut p = BodyParser { toks: &tokens, at: 0 };
    let mut root = StmtNode::new("body");
    root.children = p.block(false)?;
    Ok(root)
}

struct BodyParser<'a> {
    toks: &'a [Token],
    at: usize,
}

impl<'a> BodyParser<'a> {
    fn peek(&self) -> &'a Token {
        &self.toks[self.at.min(self.toks.len() - 1)]
    }

    fn error<T>(&self, expected: &str) -> Result<T, SyntaxError> {
        Err(SyntaxError::Parse { pos: self.peek().pos, expected: expected.into() })
    }

    fn block(&mut self, nested: bool) -> Result<Vec<StmtNode>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            let t = self.peek();
            match t.kind {
                TokenKind::EndMarker => {
                    if nested {
                        return self.error("dedent");
                    }
                    return Ok(out);
                }
                TokenKind::Dedent => {
                    if nested {
                        self.at += 1;
                        return Ok(out);
                    }
                    return self.error("statement");
                }
                TokenKind::Indent => return self.error("statement (unexpected indent)"),
                TokenKind::Newline => self.at += 1,
                _ => out.extend(self.statement()?),
            }
        }
    }

    /// One logical line, possibly a compound statement with its block.
    fn statement(&mut self) -> Result<Vec<StmtNode>, SyntaxError> {
        let start = self.at;
        let mut end = start;
        while !matches!(self.toks[end].kind, TokenKind::Newline | TokenKind::EndMarker) {
            end += 1;
        }
        let line = &self.toks[start..end];
        let first = &line[0];
        let compound = is_compound_start(line);
        if !compound {
            self.at = end;
            if self.peek().kind == TokenKind::Newline {
                self.at += 1;
            }
            return simple_statements(line);
        }
        let skip = if first.is_keyword("async") { 2 } else { 1 };
        let kind = if first.is_keyword("async") {
            line.get(1).map_or("async", |t| t.text.as_str())
        } else {
            first.text.as_str()
        };
        let kind = if first.is_op("@") { "decorator" } else { kind };
        if kind == "decorator" {
            self.at = end;
            if self.peek().kind == TokenKind::Newline {
                self.at += 1;
            }
            let mut node = StmtNode::new("decorator");
            node.leaves = line[1..].iter().map(|t| t.text.clone()).collect();
            return Ok(vec![node]);
        }
        let Some(colon) = header_colon(line, skip) else {
            self.at = end;
            return self.error("':'");
        };
        let mut node = StmtNode::new(kind);
        node.leaves = line[skip..colon].iter().map(|t| t.text.clone()).collect();
        if colon + 1 < line.len() {
            node.children = simple_statements(&line[colon + 1..])?;
            self.at = end;
            if self.peek().kind == TokenKind::Newline {
                self.at += 1;
            }
        } else {
            self.at = end;
            if self.peek().kind != TokenKind::Newline {
                return self.error("block");
            }
            self.at += 1;
            if self.peek().kind != TokenKind::Indent {
                return self.error("indented block");
            }
            self.at += 1;
            node.children = self.block(true)?;
        }
        Ok(vec![node])
    }
}

const COMPOUND: &[&str] = &["if", "elif", "else", "while", "for", "with", "try", "except", "finally", "def", "class"];

fn is_compound_start(line: &[Token]) -> bool {
    let first = &line[0];
    if first.is_op("@") {
        return true;
    }
    if first.is_keyword("async") {
        return line.get(1).is_some_and(|t| t.is_keyword("def") || t.is_keyword("for") || t.is_keyword("with"));
    }
    first.kind == TokenKind::Keyword && COMPOUND.contains(&first.text.as_str())
}

/// Depth-0 colon that ends a compound header (lambda colons skipped).
fn header_colon(line: &[Token], from: usize) -> Option<usize> {
    let mut depth = 0i32;
    let mut lambdas = 0usize;
    for (i, t) in line.iter().enumerate().skip(from) {
        match t.kind {
            TokenKind::Punct if matches!(t.text.as_str(), "(" | "[" | "{") => depth += 1,
            TokenKind::Punct if matches!(t.text.as_str(), ")" | "]" | "}") => depth -= 1,
            TokenKind::Keyword if t.text == "lambda" && depth == 0 => lambdas += 1,
            TokenKind::Punct if t.text == ":" && depth == 0 => {
                if lambdas > 0 {
                    lambdas -= 1;
                } else {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn simple_statements(line: &[Token]) -> Result<Vec<StmtNode>, SyntaxError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in line.iter().enumerate() {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth -= 1,
                ";" if depth == 0 => {
                    if i > start {
                        out.push(simple_statement(&line[start..i])?);
                    }
                    start = i + 1;
                }
                _ => {}
            }
        }
    }
    if start < line.len() {
        out.push(simple_statement(&line[start..])?);
    }
    Ok(out)
}

const SIMPLE_KEYWORDS: &[&str] =
    &["return", "pass", "break", "continue", "raise", "del", "assert", "global", "nonlocal", "import", "from", "yield"];

fn simple_statement(toks: &[Token]) -> Result<StmtNode, SyntaxError> {
    let first = &toks[0];
    if first.kind == TokenKind::Keyword && COMPOUND.contains(&first.text.as_str()) {
        return Err(SyntaxError::Parse { pos: first.pos, expected: "simple statement".into() });
    }
    let texts = |ts: &[Token]| ts.iter().map(|t| t.text.clone()).collect::<Vec<_>>();
    if first.kind == TokenKind::Keyword && SIMPLE_KEYWORDS.contains(&first.text.as_str()) {
        let mut node = StmtNode::new(&first.text);
        node.leaves = texts(&toks[1..]);
        return Ok(node);
    }
    let mut depth = 0i32;
    let mut kind = "expr";
    for (i, t) in toks.iter().enumerate() {
        match t.kind {
            TokenKind::Punct if matches!(t.text.as_str(), "(" | "[" | "{") => depth += 1,
            TokenKind::Punct if matches!(t.text.as_str(), ")" | "]" | "}") => depth -= 1,
            TokenKind::Punct if t.text == ":" && depth == 0 && i > 0 => {
                kind = "annassign";
                break;
            }
            TokenKind::Keyword if t.text == "lambda" => break,
            TokenKind::Operator if depth == 0 && t.text == "=" => {
                kind = "assign";
                break;
            }
            TokenKind::Operator
                if depth == 0
                    && t.text.len() >= 2
                    && t.text.ends_with('=')
                    && !matches!(t.text.as_str(), "==" | "<=" | ">=" | "!=") =>
            {
                kind = "augassign";
                break;
            }
            _ => {}
        }
    }
    let mut node = StmtNode::new(kind);
    node.leaves = texts(toks);
    Ok(node)
}

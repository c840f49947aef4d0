//! Indentation-aware tokenizer for the supported Python subset.
//!
//! Every token carries the whitespace, blank lines, and line continuations
//! skipped before it (`trivia`), so concatenating `trivia + text` over the
//! stream reproduces the (newline-normalized) input exactly. Only logical
//! line ends become `Newline` tokens; physical newlines inside brackets or
//! on blank/comment-only lines are trivia.

use serde::Serialize;

use super::{LexError, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Operator,
    Punct,
    Newline,
    Indent,
    Dedent,
    Comment,
    EndMarker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Skipped source preceding this token.
    pub trivia: String,
    pub pos: Pos,
    /// Byte offset of `text` in the normalized source.
    pub offset: usize,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }

    pub fn is_punct(&self, text: &str) -> bool {
        self.is(TokenKind::Punct, text)
    }

    pub fn is_keyword(&self, text: &str) -> bool {
        self.is(TokenKind::Keyword, text)
    }

    pub fn is_op(&self, text: &str) -> bool {
        self.is(TokenKind::Operator, text)
    }

    /// Layout tokens carry no source content of their own.
    pub fn is_layout(&self) -> bool {
        matches!(self.kind, TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent | TokenKind::EndMarker)
    }

    pub fn end_offset(&self) -> usize {
        self.offset + self.text.len()
    }

    /// Line of the last character of the token (multi-line strings span lines).
    pub fn end_line(&self) -> usize {
        self.pos.line + self.text.matches('\n').count()
    }
}

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

// Longest operators first so maximal munch works by linear scan.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|", "^", "~", "<", ">", "=",
];

const PUNCT: &[char] = &['(', ')', '[', ']', '{', '}', ',', ':', ';', '.'];

/// Replace `\r\n` (and lone `\r`) with `\n`.
pub fn normalize_newlines(source: &str) -> String {
    if !source.contains('\r') {
        return source.to_string();
    }
    source.replace("\r\n", "\n").replace('\r', "\n")
}

/// Tokenize `source`. The input must already be newline-normalized for the
/// round-trip property to hold byte-for-byte; `\r` is otherwise treated as
/// whitespace.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(source).run()
}

/// Like [`tokenize`], but brackets still open at end of input are left for
/// the parser to report.
pub(crate) fn tokenize_lenient(source: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer::new(source);
    lexer.lenient_eof = true;
    lexer.run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    at: usize,
    line: usize,
    line_start: usize,
    tokens: Vec<Token>,
    trivia_start: usize,
    indents: Vec<String>,
    brackets: Vec<(char, Pos)>,
    at_line_start: bool,
    lenient_eof: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            at: 0,
            line: 1,
            line_start: 0,
            tokens: Vec::new(),
            trivia_start: 0,
            indents: vec![String::new()],
            brackets: Vec::new(),
            at_line_start: true,
            lenient_eof: false,
        }
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.src[self.line_start..self.at].chars().count() + 1 }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.at..].chars().next()
    }

    fn peek_at(&self, byte_ahead: usize) -> Option<char> {
        self.src.get(self.at + byte_ahead..).and_then(|s| s.chars().next())
    }

    fn newline_consumed(&mut self) {
        self.line += 1;
        self.line_start = self.at;
    }

    fn push(&mut self, kind: TokenKind, start: usize, pos: Pos) {
        let trivia = self.src[self.trivia_start..start].to_string();
        self.tokens.push(Token { kind, text: self.src[start..self.at].to_string(), trivia, pos, offset: start });
        self.trivia_start = self.at;
    }

    fn push_synthetic(&mut self, kind: TokenKind) {
        let pos = self.pos();
        self.tokens.push(Token { kind, text: String::new(), trivia: String::new(), pos, offset: self.at });
    }

    fn last_significant_is_newline_or_none(&self) -> bool {
        match self.tokens.iter().rev().find(|t| t.kind != TokenKind::Comment) {
            None => true,
            Some(t) => matches!(t.kind, TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        while self.at < self.bytes.len() {
            if self.at_line_start && self.brackets.is_empty() {
                self.handle_indentation()?;
                if self.at >= self.bytes.len() {
                    break;
                }
            }
            let c = self.peek().expect("in bounds");
            match c {
                ' ' | '\t' | '\x0c' | '\r' => self.at += 1,
                '\n' => {
                    let start = self.at;
                    let pos = self.pos();
                    self.at += 1;
                    if self.brackets.is_empty() && !self.last_significant_is_newline_or_none() {
                        self.push(TokenKind::Newline, start, pos);
                    }
                    self.newline_consumed();
                    self.at_line_start = self.brackets.is_empty();
                }
                '#' => {
                    let start = self.at;
                    let pos = self.pos();
                    while let Some(ch) = self.peek() {
                        if ch == '\n' {
                            break;
                        }
                        self.at += ch.len_utf8();
                    }
                    self.push(TokenKind::Comment, start, pos);
                }
                '\\' => {
                    let pos = self.pos();
                    if self.peek_at(1) == Some('\n') {
                        self.at += 2;
                        self.newline_consumed();
                    } else {
                        return Err(LexError::new(pos, "unexpected character after line continuation"));
                    }
                }
                _ => self.lex_significant(c)?,
            }
        }
        if let Some((open, pos)) = self.brackets.last().filter(|_| !self.lenient_eof) {
            return Err(LexError::new(*pos, format!("unclosed '{open}'")));
        }
        if !self.last_significant_is_newline_or_none() {
            // Source without a final newline still ends its logical line.
            self.push_synthetic(TokenKind::Newline);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push_synthetic(TokenKind::Dedent);
        }
        let trivia = self.src[self.trivia_start..].to_string();
        let pos = self.pos();
        self.tokens.push(Token { kind: TokenKind::EndMarker, text: String::new(), trivia, pos, offset: self.at });
        Ok(self.tokens)
    }

    /// Measure leading whitespace of a new physical line and emit
    /// indent/dedent tokens if the line carries code.
    fn handle_indentation(&mut self) -> Result<(), LexError> {
        self.at_line_start = false;
        let start = self.at;
        while let Some(c) = self.peek() {
            if c == ' ' || c == '\t' || c == '\x0c' {
                self.at += 1;
            } else {
                break;
            }
        }
        match self.peek() {
            None | Some('\n') | Some('#') | Some('\r') => return Ok(()),
            Some('\\') if self.peek_at(1) == Some('\n') => return Ok(()),
            _ => {}
        }
        let indent = self.src[start..self.at].replace('\x0c', "");
        let pos = Pos { line: self.line, col: 1 };
        if indent.contains(' ') && indent.contains('\t') {
            return Err(LexError::new(pos, "indentation mixes tabs and spaces"));
        }
        let current = self.indents.last().expect("base level").clone();
        if indent == current {
            return Ok(());
        }
        if indent.starts_with(&current) {
            self.indents.push(indent);
            self.push_synthetic_at(TokenKind::Indent, pos);
            return Ok(());
        }
        if current.starts_with(&indent) {
            while self.indents.last().is_some_and(|lvl| lvl.len() > indent.len()) {
                self.indents.pop();
                self.push_synthetic_at(TokenKind::Dedent, pos);
            }
            if self.indents.last().map(String::as_str) != Some(indent.as_str()) {
                return Err(LexError::new(pos, "unindent does not match any outer indentation level"));
            }
            return Ok(());
        }
        Err(LexError::new(pos, "inconsistent use of tabs and spaces in indentation"))
    }

    fn push_synthetic_at(&mut self, kind: TokenKind, pos: Pos) {
        self.tokens.push(Token { kind, text: String::new(), trivia: String::new(), pos, offset: self.at });
    }

    fn lex_significant(&mut self, c: char) -> Result<(), LexError> {
        let start = self.at;
        let pos = self.pos();
        if c.is_alphabetic() || c == '_' {
            while let Some(ch) = self.peek() {
                if ch.is_alphanumeric() || ch == '_' {
                    self.at += ch.len_utf8();
                } else {
                    break;
                }
            }
            let word = &self.src[start..self.at];
            if matches!(self.peek(), Some('"') | Some('\'')) && is_string_prefix(word) {
                return self.lex_string(start, pos);
            }
            let kind = if is_keyword(word) { TokenKind::Keyword } else { TokenKind::Identifier };
            self.push(kind, start, pos);
            return Ok(());
        }
        if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            self.lex_number();
            self.push(TokenKind::Number, start, pos);
            return Ok(());
        }
        if c == '"' || c == '\'' {
            return self.lex_string(start, pos);
        }
        let rest = &self.src[self.at..];
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            self.at += op.len();
            self.push(TokenKind::Operator, start, pos);
            return Ok(());
        }
        if PUNCT.contains(&c) {
            match c {
                '(' | '[' | '{' => self.brackets.push((c, pos)),
                ')' | ']' | '}' => {
                    let expected = match c {
                        ')' => '(',
                        ']' => '[',
                        _ => '{',
                    };
                    match self.brackets.pop() {
                        Some((open, _)) if open == expected => {}
                        _ => return Err(LexError::new(pos, format!("unmatched '{c}'"))),
                    }
                }
                _ => {}
            }
            self.at += 1;
            self.push(TokenKind::Punct, start, pos);
            return Ok(());
        }
        Err(LexError::new(pos, format!("invalid character {c:?}")))
    }

    fn lex_number(&mut self) {
        let rest = &self.src[self.at..];
        let lower = rest.get(..2).map(str::to_ascii_lowercase);
        if matches!(lower.as_deref(), Some("0x") | Some("0o") | Some("0b")) {
            self.at += 2;
            while self.peek().is_some_and(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                self.at += 1;
            }
            return;
        }
        let mut seen_exp = false;
        while let Some(ch) = self.peek() {
            match ch {
                '0'..='9' | '_' | '.' => self.at += 1,
                'e' | 'E' if !seen_exp => {
                    seen_exp = true;
                    self.at += 1;
                    if matches!(self.peek(), Some('+') | Some('-')) {
                        self.at += 1;
                    }
                }
                'j' | 'J' => {
                    self.at += 1;
                    break;
                }
                _ => break,
            }
        }
    }

    fn lex_string(&mut self, start: usize, pos: Pos) -> Result<(), LexError> {
        let quote = self.peek().expect("quote");
        let triple = self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote);
        self.at += if triple { 3 } else { 1 };
        loop {
            let Some(ch) = self.peek() else {
                return Err(LexError::new(pos, "unterminated string literal"));
            };
            match ch {
                '\\' => {
                    self.at += 1;
                    if let Some(next) = self.peek() {
                        self.at += next.len_utf8();
                        if next == '\n' {
                            self.newline_consumed();
                        }
                    }
                }
                '\n' if !triple => {
                    return Err(LexError::new(pos, "unterminated string literal"));
                }
                '\n' => {
                    self.at += 1;
                    self.newline_consumed();
                }
                c if c == quote => {
                    if triple {
                        if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                            self.at += 3;
                            break;
                        }
                        self.at += 1;
                    } else {
                        self.at += 1;
                        break;
                    }
                }
                other => self.at += other.len_utf8(),
            }
        }
        self.push(TokenKind::String, start, pos);
        Ok(())
    }
}

fn is_string_prefix(word: &str) -> bool {
    matches!(word.to_ascii_lowercase().as_str(), "r" | "u" | "b" | "f" | "br" | "rb" | "fr" | "rf")
}

/// Rebuild the source from a token stream.
pub fn reconstruct(tokens: &[Token]) -> String {
    let mut out = String::new();
    for t in tokens {
        out.push_str(&t.trivia);
        out.push_str(&t.text);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::{Comment, Dedent, EndMarker, Identifier, Indent, Keyword, Newline, Number, Operator, Punct};

    fn kinds_and_text(src: &str) -> Vec<(TokenKind, std::string::String)> {
        tokenize(src).unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn empty_input_is_just_end_marker() {
        assert_eq!(kinds_and_text(""), vec![(EndMarker, String::new())]);
    }

    #[test]
    fn minimal_statement() {
        let toks = kinds_and_text("x = 1\n");
        assert_eq!(
            toks,
            vec![
                (Identifier, "x".into()),
                (Operator, "=".into()),
                (Number, "1".into()),
                (Newline, "\n".into()),
                (EndMarker, String::new()),
            ]
        );
    }

    #[test]
    fn def_with_indented_pass() {
        // def f ( ) : NEWLINE INDENT pass NEWLINE DEDENT END
        let toks = kinds_and_text("def f():\n    pass\n");
        let expected: Vec<(TokenKind, std::string::String)> = vec![
            (Keyword, "def"),
            (Identifier, "f"),
            (Punct, "("),
            (Punct, ")"),
            (Punct, ":"),
            (Newline, "\n"),
            (Indent, ""),
            (Keyword, "pass"),
            (Newline, "\n"),
            (Dedent, ""),
            (EndMarker, ""),
        ]
        .into_iter()
        .map(|(k, s)| (k, s.to_string()))
        .collect();
        assert_eq!(toks, expected);
    }

    #[test]
    fn unterminated_string_is_error() {
        let err = tokenize("x = 'abc\n").unwrap_err();
        assert!(err.reason.contains("unterminated"));
        assert_eq!(err.pos, Pos { line: 1, col: 5 });
        assert!(tokenize("x = \"\"\"abc\n").is_err());
    }

    #[test]
    fn invalid_character_is_error() {
        let err = tokenize("a = $b\n").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 5 });
        assert!(tokenize("x ? y\n").is_err());
    }

    #[test]
    fn mixed_indentation_is_error() {
        assert!(tokenize("if x:\n \tpass\n").is_err());
        assert!(tokenize("if x:\n    a\nif y:\n\tb\n").is_ok());
        assert!(tokenize("if x:\n    if y:\n\tb\n").is_err());
    }

    #[test]
    fn bad_dedent_is_error() {
        assert!(tokenize("if x:\n    a\n  b\n").is_err());
    }

    #[test]
    fn brackets_suppress_newlines_and_indents() {
        let toks = kinds_and_text("f(a,\n      b)\n");
        assert!(!toks.iter().any(|(k, _)| *k == Indent));
        assert_eq!(toks.iter().filter(|(k, _)| *k == Newline).count(), 1);
    }

    #[test]
    fn unbalanced_brackets_are_errors() {
        assert!(tokenize("f(a\n").is_err());
        assert!(tokenize("a)\n").is_err());
        assert!(tokenize("(a]\n").is_err());
    }

    #[test]
    fn comments_are_tokens_and_blank_lines_are_trivia() {
        let src = "# head\n\nx = 1  # tail\n\n\ny = 2";
        let toks = tokenize(src).unwrap();
        assert_eq!(toks.iter().filter(|t| t.kind == Comment).count(), 2);
        assert_eq!(toks.iter().filter(|t| t.kind == Newline).count(), 2);
        assert_eq!(reconstruct(&toks), src);
    }

    #[test]
    fn strings_with_prefixes_and_escapes() {
        let toks = kinds_and_text("a = rb'x\\'' + f\"{y}\" + '''m\nn'''\n");
        let strings: Vec<_> = toks.iter().filter(|(k, _)| *k == TokenKind::String).map(|(_, s)| s.as_str()).collect();
        assert_eq!(strings, vec!["rb'x\\''", "f\"{y}\"", "'''m\nn'''"]);
    }

    #[test]
    fn numbers_and_operators() {
        let toks = kinds_and_text("x **= 0x1F + 1_000.5e-3j - .5 -> y\n");
        let texts: Vec<_> = toks.iter().map(|(_, s)| s.as_str()).collect();
        assert_eq!(texts, vec!["x", "**=", "0x1F", "+", "1_000.5e-3j", "-", ".5", "->", "y", "\n", ""]);
    }

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("a\n  \nb = c\n").unwrap();
        let b = toks.iter().find(|t| t.text == "b").unwrap();
        assert_eq!(b.pos, Pos { line: 3, col: 1 });
        let c = toks.iter().find(|t| t.text == "c").unwrap();
        assert_eq!(c.pos, Pos { line: 3, col: 5 });
    }

    #[test]
    fn line_continuation_is_trivia() {
        let src = "x = 1 + \\\n    2\n";
        let toks = tokenize(src).unwrap();
        assert_eq!(reconstruct(&toks), src);
        assert!(!toks.iter().any(|t| t.kind == Indent));
    }

    #[test]
    fn missing_trailing_newline_still_closes_blocks() {
        let toks = kinds_and_text("def f():\n    pass");
        let tail: Vec<_> = toks.iter().rev().take(3).map(|(k, _)| *k).collect();
        assert_eq!(tail, vec![EndMarker, Dedent, Newline]);
    }
}

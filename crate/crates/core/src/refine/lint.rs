//! Static checks of a candidate function body against the repository.

use std::fmt;

use serde::Serialize;

use crate::context::{line_prefix, CompletionPoint};
use crate::index::{RepoIndex, Resolution, Symbol, SymbolKind};
use crate::syntax::{body_tree, dedent, tokenize, FunctionDecl, Pos, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum DiagnosticKind {
    #[serde(rename = "SyntaxError")]
    SyntaxErrorD,
    UndefinedName,
    UnimportedUsage,
    ArityMismatch,
    UnknownAttribute,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::SyntaxErrorD => "SyntaxError",
            DiagnosticKind::UndefinedName => "UndefinedName",
            DiagnosticKind::UnimportedUsage => "UnimportedUsage",
            DiagnosticKind::ArityMismatch => "ArityMismatch",
            DiagnosticKind::UnknownAttribute => "UnknownAttribute",
        })
    }
}

/// Completion-relative span (1-based; columns counted after dedenting).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub span: Span,
    pub message: String,
    pub suggested_fix: Option<String>,
}

impl Diagnostic {
    /// `<kind> at <line>:<col>: <message>`
    pub fn render(&self) -> String {
        format!("{} at {}:{}: {}", self.kind, self.span.start.line, self.span.start.col, self.message)
    }
}

/// The completion as a body: dedented, outer blank lines removed.
pub fn normalize_body(completion: &str) -> String {
    let d = dedent(completion);
    let lines: Vec<&str> = d.split('\n').collect();
    let first = lines.iter().position(|l| !l.trim().is_empty());
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    match (first, last) {
        (Some(a), Some(b)) => lines[a..=b].iter().map(|l| format!("{l}\n")).collect(),
        _ => String::new(),
    }
}

/// The module source with the target function's body replaced by `body`
/// (indented one level below the `def`).
pub fn splice_body(source: &str, decl: &FunctionDecl, body: &str) -> String {
    let indent = " ".repeat(decl.indent + 4);
    let mut out = line_prefix(source, decl.signature_end_line);
    for line in body.lines() {
        if line.trim().is_empty() {
            out.push('\n');
        } else {
            out.push_str(&indent);
            out.push_str(line);
            out.push('\n');
        }
    }
    let head = line_prefix(source, decl.body_span.last);
    out.push_str(&source[head.len().min(source.len())..]);
    out
}

fn syntax_error(line: usize, col: usize, message: String) -> Diagnostic {
    let pos = Pos { line: line.max(1), col: col.max(1) };
    Diagnostic { kind: DiagnosticKind::SyntaxErrorD, span: Span { start: pos, end: pos }, message, suggested_fix: None }
}

/// Lint `completion` as the body of the function at `point`.
pub fn lint_completion(completion: &str, point: &CompletionPoint, index: &RepoIndex) -> Vec<Diagnostic> {
    let body = normalize_body(completion);
    if body.is_empty() {
        return vec![syntax_error(1, 1, "empty function body".into())];
    }
    if let Err(e) = body_tree(&body) {
        let p = e.pos();
        return vec![syntax_error(p.line, p.col, e.to_string())];
    }
    let Some(decl) = point.decl(index) else {
        return vec![syntax_error(1, 1, format!("target function {} not found", point.function))];
    };
    let source = index.source(&point.module).unwrap_or_default();
    let spliced = splice_body(source, decl, &body);
    let next = match index.with_module_source(&point.module, &spliced) {
        Ok(n) => n,
        Err(e) => {
            let p = e.pos();
            return vec![syntax_error(p.line.saturating_sub(decl.signature_end_line), p.col, e.to_string())];
        }
    };
    let Some((_, new_decl)) = next.module(&point.module).and_then(|m| m.find_function(point.local_name())) else {
        return vec![syntax_error(1, 1, "body does not keep the function intact".into())];
    };
    let shift_line = new_decl.signature_end_line;
    let shift_col = decl.indent + 4;
    let tokens: Vec<Token> = tokenize(&body).unwrap_or_default();
    let scope = point.scope();
    let module = next.module(&point.module).expect("module present");
    let mut out: Vec<Diagnostic> = Vec::new();
    for occ in module.occurrences_in(new_decl.body_span) {
        let at = Pos { line: occ.pos.line - shift_line, col: occ.pos.col.saturating_sub(shift_col).max(1) };
        let walk = next.walk_chain(&occ.chain, &scope);
        let head = &occ.chain[0];
        let span_of = |i: usize| chain_span(&tokens, at, &occ.chain, i);
        if !walk[0].is_resolved() {
            let d = match importable(&next, head, &point.module) {
                Some(sym) => Diagnostic {
                    kind: DiagnosticKind::UnimportedUsage,
                    span: span_of(0),
                    message: format!("'{head}' is defined in {} but not imported", sym.declaration.module),
                    suggested_fix: Some(format!("from {} import {head}", sym.declaration.module)),
                },
                None => Diagnostic {
                    kind: DiagnosticKind::UndefinedName,
                    span: span_of(0),
                    message: format!("undefined name '{head}'"),
                    suggested_fix: None,
                },
            };
            push_unique(&mut out, d);
            continue;
        }
        let mut flagged = false;
        for i in 1..occ.chain.len() {
            if walk[i].is_resolved() {
                continue;
            }
            if let Some(class) = walk[i - 1].instance_class(&next) {
                if !has_opaque_ancestor(&next, &class) {
                    let short = class.rsplit('.').next().unwrap_or(&class);
                    push_unique(
                        &mut out,
                        Diagnostic {
                            kind: DiagnosticKind::UnknownAttribute,
                            span: span_of(i),
                            message: format!("'{short}' has no attribute '{}'", occ.chain[i]),
                            suggested_fix: None,
                        },
                    );
                    flagged = true;
                }
            }
            break;
        }
        if flagged || !occ.called {
            continue;
        }
        let last = walk.len() - 1;
        let Some(target) = walk[last].symbol() else { continue };
        let receiver = if last > 0 { Some(&walk[last - 1]) } else { None };
        let Some((name, decl, bound)) = callee(&next, target, receiver) else { continue };
        let Some(given) = count_call_args(&tokens, at, occ.chain.len()) else { continue };
        let (min, max) = decl.arity(bound);
        if given < min || max.is_some_and(|m| given > m) {
            let expected = match max {
                Some(m) if m == min => format!("{min}"),
                Some(m) => format!("{min} to {m}"),
                None => format!("at least {min}"),
            };
            push_unique(
                &mut out,
                Diagnostic {
                    kind: DiagnosticKind::ArityMismatch,
                    span: span_of(last),
                    message: format!("{name}() takes {expected} argument(s) but {given} were given"),
                    suggested_fix: None,
                },
            );
        }
    }
    out
}

fn push_unique(out: &mut Vec<Diagnostic>, d: Diagnostic) {
    if !out.contains(&d) {
        out.push(d);
    }
}

/// A top-level class or function named `name` in another module; the
/// lexicographically first module wins.
pub fn importable<'a>(index: &'a RepoIndex, name: &str, from_module: &str) -> Option<&'a Symbol> {
    index.symbols().values().find(|s| {
        matches!(s.kind, SymbolKind::Class | SymbolKind::Function)
            && s.name() == name
            && s.declaration.module != from_module
            && s.qualified_name == format!("{}.{name}", s.declaration.module)
    })
}

/// True when some class in the linearization has a base outside the index.
fn has_opaque_ancestor(index: &RepoIndex, class: &str) -> bool {
    let Ok(lin) = index.linearization(class) else { return true };
    lin.iter().any(|c| {
        let Some(sym) = index.symbol(c) else { return true };
        let local = &c[sym.declaration.module.len() + 1..];
        let Some(decl) = index.module(&sym.declaration.module).and_then(|m| m.class(local)) else { return true };
        let raw = decl.bases.iter().filter(|b| b.as_str() != "object").count();
        let resolved = index.direct_bases().get(c).map_or(0, Vec::len);
        raw > resolved
    })
}

/// The function invoked by a call through `target`, and whether the
/// receiver is bound implicitly.
fn callee<'a>(
    index: &'a RepoIndex,
    target: &Symbol,
    receiver: Option<&Resolution>,
) -> Option<(String, &'a FunctionDecl, bool)> {
    match target.kind {
        SymbolKind::Function | SymbolKind::Method => {
            let decl = function_decl(index, target)?;
            let bound = match (target.kind, receiver) {
                (SymbolKind::Method, Some(Resolution::Symbol(s))) if s.kind == SymbolKind::Class => {
                    decl.is_classmethod()
                }
                (SymbolKind::Method, _) => true,
                _ => false,
            };
            Some((target.name().to_string(), decl, bound))
        }
        SymbolKind::Class => {
            let init = index.lookup_member(target, "__init__").ok()??;
            if init.kind != SymbolKind::Method {
                return None;
            }
            let decl = function_decl(index, &init)?;
            Some((target.name().to_string(), decl, true))
        }
        _ => None,
    }
}

fn function_decl<'a>(index: &'a RepoIndex, sym: &Symbol) -> Option<&'a FunctionDecl> {
    let local = sym.qualified_name.strip_prefix(&format!("{}.", sym.declaration.module))?;
    index.module(&sym.declaration.module)?.find_function(local).map(|(_, f)| f)
}

fn token_at(tokens: &[Token], at: Pos) -> Option<usize> {
    tokens.iter().position(|t| t.pos == at && t.kind == TokenKind::Identifier)
}

/// Span of chain element `i` for an occurrence starting at `at`.
fn chain_span(tokens: &[Token], at: Pos, chain: &[String], i: usize) -> Span {
    if let Some(start) = token_at(tokens, at) {
        let idx = start + 2 * i;
        if let Some(t) = tokens.get(idx).filter(|t| t.text == chain[i]) {
            let end = Pos { line: t.pos.line, col: t.pos.col + t.text.chars().count() };
            return Span { start: t.pos, end };
        }
    }
    Span { start: at, end: at }
}

/// Number of arguments of the call right after a chain of `len` names, or
/// `None` when the argument list is not plainly countable.
fn count_call_args(tokens: &[Token], at: Pos, len: usize) -> Option<usize> {
    let start = token_at(tokens, at)?;
    let open = start + 2 * (len - 1) + 1;
    if !tokens.get(open)?.is_punct("(") {
        return None;
    }
    let mut depth = 0i32;
    let mut args = 0usize;
    let mut current_empty = true;
    for t in &tokens[open + 1..] {
        if t.kind == TokenKind::Punct {
            match t.text.as_str() {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" if depth == 0 => {
                    if !current_empty {
                        args += 1;
                    }
                    return Some(args);
                }
                ")" | "]" | "}" => depth -= 1,
                "," if depth == 0 => {
                    if current_empty {
                        return None;
                    }
                    args += 1;
                    current_empty = true;
                    continue;
                }
                _ => {}
            }
        }
        if depth == 0 && current_empty && (t.is_op("*") || t.is_op("**")) {
            return None;
        }
        if !t.is_layout() && t.kind != TokenKind::Comment {
            current_empty = false;
        }
    }
    None
}

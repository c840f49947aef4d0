use std::fmt;

use serde::{Deserialize, Serialize};

use super::Pos;

/// Inclusive range of 1-based source lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineSpan {
    pub first: usize,
    pub last: usize,
}

impl LineSpan {
    pub fn new(first: usize, last: usize) -> Self {
        debug_assert!(first <= last);
        LineSpan { first, last }
    }

    pub fn contains_line(&self, line: usize) -> bool {
        self.first <= line && line <= self.last
    }

    pub fn contains(&self, other: &LineSpan) -> bool {
        self.first <= other.first && other.last <= self.last
    }

    pub fn overlaps(&self, other: &LineSpan) -> bool {
        self.first <= other.last && other.first <= self.last
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleAst {
    pub path: String,
    pub module_docstring: Option<String>,
    pub imports: Vec<ImportDecl>,
    pub classes: Vec<ClassDecl>,
    pub functions: Vec<FunctionDecl>,
    /// Module-level assignments (`x = ...`, `x: T = ...`).
    pub variables: Vec<Assignment>,
    pub opaque_statements: Vec<LineSpan>,
    pub occurrences: Vec<IdentifierOccurrence>,
    /// Number of lines in the normalized source.
    pub line_count: usize,
}

impl ModuleAst {
    pub fn occurrences_in(&self, span: LineSpan) -> impl Iterator<Item = &IdentifierOccurrence> {
        self.occurrences.iter().filter(move |o| span.contains_line(o.pos.line))
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().rev().find(|f| f.name == name)
    }

    /// Look up a function by `name` or `Class.method`.
    pub fn find_function(&self, dotted: &str) -> Option<(Option<&ClassDecl>, &FunctionDecl)> {
        match dotted.rsplit_once('.') {
            None => self.function(dotted).map(|f| (None, f)),
            Some((class, method)) => {
                let c = self.class(class)?;
                c.method(method).map(|m| (Some(c), m))
            }
        }
    }

    /// Names of top-level classes and functions in source order.
    pub fn top_level_names(&self) -> Vec<&str> {
        let mut named: Vec<(usize, &str)> = self
            .classes
            .iter()
            .map(|c| (c.span.first, c.name.as_str()))
            .chain(self.functions.iter().map(|f| (f.span.first, f.name.as_str())))
            .collect();
        named.sort();
        named.into_iter().map(|(_, n)| n).collect()
    }

    /// Line of the last import statement, if any.
    pub fn last_import_line(&self) -> Option<usize> {
        self.imports.iter().map(|i| i.end_line).max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportForm {
    Plain,
    From,
}

/// Dotted module reference with its count of leading relative dots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ModulePath {
    pub dots: usize,
    pub dotted: String,
}

impl fmt::Display for ModulePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", ".".repeat(self.dots), self.dotted)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportDecl {
    pub form: ImportForm,
    pub module_path: ModulePath,
    /// For plain imports, the alias of the module (`import a.b as c`).
    pub module_alias: Option<String>,
    pub imported_names: Vec<(String, Option<String>)>,
    pub pos: Pos,
    pub end_line: usize,
}

impl ImportDecl {
    /// Names this import binds in the importing scope, with the item each
    /// refers to (`None` target means "the imported module itself").
    pub fn bound_names(&self) -> Vec<(String, Option<String>)> {
        match self.form {
            ImportForm::Plain => {
                let bound = match &self.module_alias {
                    Some(alias) => alias.clone(),
                    None => self.module_path.dotted.split('.').next().unwrap_or_default().to_string(),
                };
                vec![(bound, None)]
            }
            ImportForm::From => self
                .imported_names
                .iter()
                .filter(|(n, _)| n != "*")
                .map(|(n, a)| (a.clone().unwrap_or_else(|| n.clone()), Some(n.clone())))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassDecl {
    pub name: String,
    pub bases: Vec<String>,
    pub docstring: Option<String>,
    pub methods: Vec<FunctionDecl>,
    /// Class-level assignments and `self.x` assignments found in methods.
    pub attributes: Vec<Assignment>,
    pub decorators: Vec<String>,
    pub span: LineSpan,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&FunctionDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn attribute(&self, name: &str) -> Option<&Assignment> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn signature_text(&self) -> String {
        if self.bases.is_empty() {
            format!("class {}", self.name)
        } else {
            format!("class {}({})", self.name, self.bases.join(", "))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Regular,
    /// `*args`
    VarPositional,
    /// `**kwargs`
    VarKeyword,
    /// keyword-only parameters after `*` / `*args`
    KeywordOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Parameter {
    pub name: String,
    pub annotation: Option<String>,
    pub default: Option<String>,
    pub kind: ParamKind,
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ParamKind::VarPositional => write!(f, "*")?,
            ParamKind::VarKeyword => write!(f, "**")?,
            _ => {}
        }
        write!(f, "{}", self.name)?;
        match (&self.annotation, &self.default) {
            (Some(a), Some(d)) => write!(f, ": {a} = {d}"),
            (Some(a), None) => write!(f, ": {a}"),
            (None, Some(d)) => write!(f, "={d}"),
            (None, None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<Parameter>,
    pub return_annotation: Option<String>,
    pub docstring: Option<String>,
    pub decorators: Vec<String>,
    pub is_method: bool,
    /// Whole declaration including decorators and signature.
    pub span: LineSpan,
    /// Line on which the signature's terminating colon sits.
    pub signature_end_line: usize,
    pub body_span: LineSpan,
    /// Indentation (in columns) of the `def` line.
    pub indent: usize,
    /// Names bound inside the body, in source order.
    pub locals: Vec<LocalBinding>,
}

impl FunctionDecl {
    /// `def name(params) -> ret`, rendered canonically from the parsed parts.
    pub fn signature_text(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        // A bare `*` separator is stored as a nameless keyword-only marker.
        let params: Vec<String> = params.into_iter().map(|p| if p.is_empty() { "*".into() } else { p }).collect();
        match &self.return_annotation {
            Some(ret) => format!("def {}({}) -> {}", self.name, params.join(", "), ret),
            None => format!("def {}({})", self.name, params.join(", ")),
        }
    }

    pub fn is_staticmethod(&self) -> bool {
        self.decorators.iter().any(|d| d == "staticmethod")
    }

    pub fn is_classmethod(&self) -> bool {
        self.decorators.iter().any(|d| d == "classmethod")
    }

    /// Parameters callers pass explicitly (the receiver of an instance or
    /// class method is excluded).
    pub fn callable_params(&self) -> &[Parameter] {
        if self.is_method && !self.is_staticmethod() && !self.params.is_empty() {
            &self.params[1..]
        } else {
            &self.params
        }
    }

    /// Accepted (min, max) argument counts; `None` max means unbounded.
    pub fn arity(&self, bound: bool) -> (usize, Option<usize>) {
        let params = if bound { self.callable_params() } else { &self.params[..] };
        let mut min = 0;
        let mut max = Some(0usize);
        for p in params {
            match p.kind {
                ParamKind::VarPositional | ParamKind::VarKeyword => max = None,
                _ if p.name.is_empty() || p.name == "/" => {}
                _ => {
                    if p.default.is_none() {
                        min += 1;
                    }
                    max = max.map(|m| m + 1);
                }
            }
        }
        (min, max)
    }
}

/// A module- or class-level assignment target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub name: String,
    pub annotation: Option<String>,
    /// Dotted callee when the value is a direct call `Name(...)`.
    pub constructor: Option<String>,
    pub line: usize,
}

impl Assignment {
    /// Declared or constructor-derived type text.
    pub fn type_text(&self) -> Option<&str> {
        self.annotation.as_deref().or(self.constructor.as_deref())
    }
}

/// A name bound inside a function body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalBinding {
    pub name: String,
    pub annotation: Option<String>,
    pub constructor: Option<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct IdentifierOccurrence {
    pub chain: Vec<String>,
    pub pos: Pos,
    /// True when the chain is immediately followed by `(`.
    pub called: bool,
}

//! Cross-file context for one completion point: what the target function
//! can see from the rest of the repository, scored for relevance.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::index::{ImportResolution, RepoIndex, Resolution, Scope, Symbol, SymbolKind};
use crate::syntax::{FunctionDecl, LineSpan, ModuleAst, Pos};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PointError {
    #[error("module {0:?} is not indexed")]
    UnknownModule(String),
    #[error("function {function:?} not found in module {module:?}")]
    UnknownFunction { module: String, function: String },
    #[error("function {0:?} has its body on the signature line")]
    InlineBody(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompletionPoint {
    pub module: String,
    /// Fully qualified name of the target function.
    pub function: String,
    pub cursor: Pos,
    /// File text up to and including the signature line.
    pub prefix: String,
}

impl CompletionPoint {
    /// Locate `function` (`name`, `Class.method`, or fully qualified) in
    /// `module`.
    pub fn new(index: &RepoIndex, module: &str, function: &str) -> Result<CompletionPoint, PointError> {
        let ast = index.module(module).ok_or_else(|| PointError::UnknownModule(module.to_string()))?;
        let local = function.strip_prefix(&format!("{module}.")).unwrap_or(function);
        let (_, decl) = ast.find_function(local).ok_or_else(|| PointError::UnknownFunction {
            module: module.to_string(),
            function: function.to_string(),
        })?;
        if decl.body_span.first <= decl.signature_end_line {
            return Err(PointError::InlineBody(function.to_string()));
        }
        let source = index.source(module).unwrap_or_default();
        let prefix = line_prefix(source, decl.signature_end_line);
        Ok(CompletionPoint {
            module: module.to_string(),
            function: format!("{module}.{local}"),
            cursor: Pos { line: decl.signature_end_line + 1, col: 1 },
            prefix,
        })
    }

    /// Function name relative to its module (`f` or `Class.method`).
    pub fn local_name(&self) -> &str {
        self.function.strip_prefix(&format!("{}.", self.module)).unwrap_or(&self.function)
    }

    pub fn scope(&self) -> Scope {
        Scope::within(&self.module, self.local_name())
    }

    pub fn decl<'a>(&self, index: &'a RepoIndex) -> Option<&'a FunctionDecl> {
        index.module(&self.module)?.find_function(self.local_name()).map(|(_, f)| f)
    }
}

/// The first `lines` lines of `source`, each with its newline.
pub fn line_prefix(source: &str, lines: usize) -> String {
    let mut end = 0;
    for (n, line) in source.split_inclusive('\n').enumerate() {
        if n == lines {
            break;
        }
        end += line.len();
    }
    let mut out = source[..end].to_string();
    if !out.is_empty() && !out.ends_with('\n') {
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextKind {
    FileRole,
    ModuleDependency,
    UserSymbol,
    LocalType,
    ThirdParty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextItem {
    pub kind: ContextKind,
    pub payload: String,
    pub source_symbol: Option<String>,
    pub relevance: f64,
}

impl ContextItem {
    fn new(kind: ContextKind, payload: String, source_symbol: Option<String>) -> ContextItem {
        ContextItem { kind, payload, source_symbol, relevance: 0.0 }
    }

    /// Tie-break key: the symbol, or the payload for symbol-less items.
    pub fn sort_key(&self) -> &str {
        self.source_symbol.as_deref().unwrap_or(&self.payload)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossFileContext {
    pub point: CompletionPoint,
    pub items: Vec<ContextItem>,
}

impl CrossFileContext {
    pub fn items_of(&self, kind: ContextKind) -> impl Iterator<Item = &ContextItem> {
        self.items.iter().filter(move |i| i.kind == kind)
    }

    /// `{point:{module,function,line,col}, items:[{kind,payload,symbol,score}]}`
    pub fn to_json(&self) -> Value {
        json!({
            "point": {
                "module": self.point.module,
                "function": self.point.function,
                "line": self.point.cursor.line,
                "col": self.point.cursor.col,
            },
            "items": self.items.iter().map(|i| json!({
                "kind": i.kind,
                "payload": i.payload,
                "symbol": i.source_symbol,
                "score": i.relevance,
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelevanceWeights {
    pub referenced_in_target: f64,
    pub user_defined: f64,
    pub referenced_elsewhere: f64,
}

impl Default for RelevanceWeights {
    fn default() -> Self {
        RelevanceWeights { referenced_in_target: 3.0, user_defined: 2.0, referenced_elsewhere: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContextOptions {
    pub weights: RelevanceWeights,
    pub max_members: usize,
}

impl Default for ContextOptions {
    fn default() -> Self {
        ContextOptions { weights: RelevanceWeights::default(), max_members: 10 }
    }
}

/// Module docstring, or `Defines: ...` over top-level names.
pub fn summarize_file_role(module: &ModuleAst) -> String {
    if let Some(doc) = &module.module_docstring {
        return doc.clone();
    }
    let names = module.top_level_names();
    if names.is_empty() {
        "Defines: (nothing)".to_string()
    } else {
        format!("Defines: {}", names.join(", "))
    }
}

/// Annotated parameters, plus locals assigned `Name(...)` where `Name` is a
/// class. The receiver of a method is skipped.
pub fn infer_local_types(function: &FunctionDecl, module: &str, index: &RepoIndex) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let skip_receiver = function.is_method && !function.is_staticmethod();
    for (i, p) in function.params.iter().enumerate() {
        if skip_receiver && i == 0 {
            continue;
        }
        if let Some(a) = &p.annotation {
            if !p.name.is_empty() && p.name != "/" {
                out.insert(p.name.clone(), a.clone());
            }
        }
    }
    let mut last: BTreeMap<&str, Option<&str>> = BTreeMap::new();
    for l in &function.locals {
        last.insert(&l.name, l.constructor.as_deref());
    }
    for (name, ctor) in last {
        match ctor.filter(|c| index.resolve_type(c, module).is_some()) {
            Some(c) => {
                out.insert(name.to_string(), c.to_string());
            }
            None => {
                out.remove(name);
            }
        }
    }
    out
}

/// Collect and rank the context for `point`.
pub fn identify_context(
    point: &CompletionPoint,
    index: &RepoIndex,
    options: &ContextOptions,
) -> Result<CrossFileContext, PointError> {
    let module = index.module(&point.module).ok_or_else(|| PointError::UnknownModule(point.module.clone()))?;
    let function = point.decl(index).ok_or_else(|| PointError::UnknownFunction {
        module: point.module.clone(),
        function: point.function.clone(),
    })?;
    let mut items = vec![ContextItem::new(ContextKind::FileRole, summarize_file_role(module), None)];

    let mut dependencies = BTreeSet::new();
    let mut third_party: BTreeMap<String, Option<String>> = BTreeMap::new();
    for decl in &module.imports {
        match index.resolve_import(decl, &point.module) {
            ImportResolution::UserDefined { module: m } => {
                if dependencies.insert(m.clone()) {
                    let payload = match index.module(&m).and_then(|a| a.module_docstring.as_deref()) {
                        Some(doc) => format!("{m}: {}", doc.lines().next().unwrap_or_default()),
                        None => m.clone(),
                    };
                    items.push(ContextItem::new(ContextKind::ModuleDependency, payload, Some(m)));
                }
            }
            ImportResolution::ThirdParty { package, version } => {
                third_party.insert(package, version);
            }
            ImportResolution::Unresolved => {}
        }
    }

    let own_class = point.local_name().rsplit_once('.').map(|(c, _)| format!("{}.{c}", point.module));
    let mut user_symbols = BTreeSet::new();
    for decl in &module.imports {
        for (bound, _) in decl.bound_names() {
            if let Resolution::Symbol(s) = index.resolve_name(&[bound], &Scope::module(&point.module)) {
                if matches!(s.kind, SymbolKind::Class | SymbolKind::Function) {
                    user_symbols.insert(s.qualified_name);
                }
            }
        }
    }
    let target_refs = referenced_symbols(index, &point.module, function.span, true);
    for qn in &target_refs {
        if let Some(s) = index.symbol(qn) {
            if matches!(s.kind, SymbolKind::Class | SymbolKind::Function) {
                user_symbols.insert(s.qualified_name.clone());
            }
        }
    }
    for qn in user_symbols {
        let Some(sym) = index.symbol(&qn) else { continue };
        if sym.declaration.module == point.module || Some(&qn) == own_class.as_ref() {
            continue;
        }
        let payload = render_symbol(index, sym, options.max_members);
        items.push(ContextItem::new(ContextKind::UserSymbol, payload, Some(qn)));
    }

    for (name, ty) in infer_local_types(function, &point.module, index) {
        let class = index.resolve_type(&ty, &point.module);
        items.push(ContextItem::new(ContextKind::LocalType, format!("{name}: {ty}"), class));
    }

    for (package, version) in third_party {
        let payload = match version {
            Some(v) => format!("{package}=={v}"),
            None => package.clone(),
        };
        items.push(ContextItem::new(ContextKind::ThirdParty, payload, Some(external_key(&package))));
    }

    let items = rank_relevance(items, point, index, &options.weights);
    Ok(CrossFileContext { point: point.clone(), items })
}

fn external_key(package: &str) -> String {
    format!("{package} (third-party)")
}

/// Score items and sort by (relevance desc, key asc).
pub fn rank_relevance(
    mut items: Vec<ContextItem>,
    point: &CompletionPoint,
    index: &RepoIndex,
    weights: &RelevanceWeights,
) -> Vec<ContextItem> {
    if items.is_empty() {
        return items;
    }
    let (target_refs, elsewhere_refs) = match point.decl(index) {
        Some(f) => (
            referenced_symbols(index, &point.module, f.span, true),
            referenced_symbols(index, &point.module, f.span, false),
        ),
        None => (BTreeSet::new(), BTreeSet::new()),
    };
    for item in &mut items {
        let Some(key) = item.source_symbol.as_deref() else {
            item.relevance = 0.0;
            continue;
        };
        let in_target = target_refs.contains(key);
        let elsewhere = elsewhere_refs.contains(key);
        let mut score = 0.0;
        if in_target {
            score += weights.referenced_in_target;
        }
        if item.kind != ContextKind::ThirdParty && index.symbol(key).is_some() {
            score += weights.user_defined;
        }
        if elsewhere {
            score += weights.referenced_elsewhere;
        }
        if item.kind == ContextKind::ThirdParty {
            score = score.min(1.0);
        }
        item.relevance = score;
    }
    items.sort_by(|a, b| b.relevance.total_cmp(&a.relevance).then_with(|| a.sort_key().cmp(b.sort_key())));
    items
}

/// Symbols reached by occurrence chains inside `span` (or outside it when
/// `inside` is false). A member also marks its class and module; a typed
/// instance marks its class; third-party references mark the package.
fn referenced_symbols(index: &RepoIndex, module: &str, span: LineSpan, inside: bool) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let Some(ast) = index.module(module) else { return out };
    for occ in &ast.occurrences {
        if span.contains_line(occ.pos.line) != inside {
            continue;
        }
        let scope = scope_at(ast, module, occ.pos.line);
        for r in index.walk_chain(&occ.chain, &scope) {
            match &r {
                Resolution::Symbol(s) => mark(&mut out, s),
                Resolution::Local(v) => {
                    if let Some(c) = v.class.as_deref().and_then(|c| index.symbol(c)) {
                        mark(&mut out, c);
                    }
                }
                Resolution::External { package } => {
                    out.insert(external_key(package));
                }
                _ => {}
            }
            if let Some(c) = r.instance_class(index).and_then(|c| index.symbol(&c)) {
                mark(&mut out, c);
            }
        }
    }
    out
}

fn mark(out: &mut BTreeSet<String>, s: &Symbol) {
    out.insert(s.qualified_name.clone());
    out.insert(s.declaration.module.clone());
    if matches!(s.kind, SymbolKind::Method | SymbolKind::Variable) {
        if let Some(owner) = s.owner() {
            out.insert(owner.to_string());
        }
    }
}

/// Innermost function or class around `line`.
pub fn scope_at(ast: &ModuleAst, module: &str, line: usize) -> Scope {
    for c in &ast.classes {
        if c.span.contains_line(line) {
            for m in &c.methods {
                if m.span.contains_line(line) {
                    return Scope::within(module, &format!("{}.{}", c.name, m.name));
                }
            }
        }
    }
    for f in &ast.functions {
        if f.span.contains_line(line) {
            return Scope::within(module, &f.name);
        }
    }
    for c in ast.classes.iter().rev() {
        if c.span.contains_line(line) {
            return Scope::within(module, &c.name);
        }
    }
    Scope::module(module)
}

fn push_docstring(out: &mut String, doc: &Option<String>, indent: &str) {
    let Some(doc) = doc else { return };
    let mut lines = doc.lines();
    out.push_str(indent);
    out.push_str("\"\"\"");
    out.push_str(lines.next().unwrap_or_default());
    for l in lines {
        out.push('\n');
        if !l.is_empty() {
            out.push_str(indent);
            out.push_str(l);
        }
    }
    out.push_str("\"\"\"\n");
}

/// Signature and docstring of a class or function; classes list up to
/// `max_members` member signatures in alphabetical order.
pub fn render_symbol(index: &RepoIndex, sym: &Symbol, max_members: usize) -> String {
    let mut out = format!("# from {}\n", sym.declaration.module);
    out.push_str(sym.signature_text.as_deref().unwrap_or(sym.name()));
    out.push('\n');
    push_docstring(&mut out, &sym.docstring, "    ");
    if sym.kind == SymbolKind::Class {
        let prefix = format!("{}.", sym.qualified_name);
        let mut members: Vec<&Symbol> = index
            .symbols()
            .range(prefix.clone()..)
            .take_while(|(k, _)| k.starts_with(&prefix))
            .map(|(_, s)| s)
            .filter(|s| !s.qualified_name[prefix.len()..].contains('.'))
            .filter(|s| match s.kind {
                SymbolKind::Method => true,
                SymbolKind::Variable => s.type_text.is_some(),
                _ => false,
            })
            .collect();
        members.sort_by(|a, b| a.name().cmp(b.name()));
        for m in members.into_iter().take(max_members) {
            match m.kind {
                SymbolKind::Method => {
                    out.push_str("    ");
                    out.push_str(m.signature_text.as_deref().unwrap_or_default());
                    out.push('\n');
                    push_docstring(&mut out, &m.docstring, "        ");
                }
                _ => {
                    out.push_str(&format!("    {}: {}\n", m.name(), m.type_text.as_deref().unwrap_or_default()));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn repo(files: &[(&str, &str)], reqs: &[(&str, &str)]) -> RepoIndex {
        RepoIndex::from_sources(
            "/repo",
            files.iter().map(|(p, s)| (p.to_string(), s.to_string())),
            reqs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        )
    }

    const SERVICE: &str = "class Service:\n    \"\"\"Manages service lifecycle.\"\"\"\n    def get_service_state(self) -> str:\n        return self.state\n";

    fn fixture() -> RepoIndex {
        repo(
            &[
                ("app/service.py", SERVICE),
                ("app/util.py", "def helper():\n    pass\n\ndef other():\n    pass\n"),
                (
                    "app/main.py",
                    "import requests\nfrom app.service import Service\nfrom app.util import helper, other\n\ndef log_state(svc: Service):\n    print(svc.get_service_state())\n",
                ),
            ],
            &[("requests", "2.31.0")],
        )
    }

    #[test]
    fn point_prefix_and_cursor() {
        let idx = fixture();
        let p = CompletionPoint::new(&idx, "app.main", "log_state").unwrap();
        assert_eq!(p.function, "app.main.log_state");
        assert_eq!(p.cursor, Pos { line: 6, col: 1 });
        assert!(p.prefix.ends_with("def log_state(svc: Service):\n"));
        assert!(idx.source("app.main").unwrap().starts_with(&p.prefix));
        assert!(matches!(CompletionPoint::new(&idx, "app.main", "nope"), Err(PointError::UnknownFunction { .. })));
        assert!(matches!(CompletionPoint::new(&idx, "nope", "f"), Err(PointError::UnknownModule(_))));
    }

    #[test]
    fn fixture_context_has_service() {
        let idx = fixture();
        let p = CompletionPoint::new(&idx, "app.main", "log_state").unwrap();
        let ctx = identify_context(&p, &idx, &ContextOptions::default()).unwrap();
        let svc = ctx
            .items_of(ContextKind::UserSymbol)
            .find(|i| i.source_symbol.as_deref() == Some("app.service.Service"))
            .unwrap();
        assert!(svc.payload.contains("def get_service_state(self) -> str"));
        assert!(svc.payload.contains("Manages service lifecycle."));
        assert!(!svc.payload.contains("return self.state"));
        assert_eq!(svc.relevance, 5.0);
        let tp: Vec<_> = ctx.items_of(ContextKind::ThirdParty).collect();
        assert_eq!(tp.len(), 1);
        assert_eq!(tp[0].payload, "requests==2.31.0");
        assert!(tp[0].relevance <= 1.0);
        let pos = |key: &str| ctx.items.iter().position(|i| i.sort_key() == key).unwrap();
        assert!(pos("app.service.Service") < pos("requests (third-party)"));
        assert_eq!(ctx.items_of(ContextKind::UserSymbol).next().unwrap().sort_key(), "app.service.Service");
        let locals: Vec<_> = ctx.items_of(ContextKind::LocalType).map(|i| i.payload.as_str()).collect();
        assert_eq!(locals, vec!["svc: Service"]);
    }

    #[test]
    fn unreferenced_user_symbols_tie_alphabetically() {
        let idx = fixture();
        let p = CompletionPoint::new(&idx, "app.main", "log_state").unwrap();
        let ctx = identify_context(&p, &idx, &ContextOptions::default()).unwrap();
        let syms: Vec<_> = ctx
            .items_of(ContextKind::UserSymbol)
            .filter(|i| i.relevance == 2.0)
            .map(|i| i.source_symbol.clone().unwrap())
            .collect();
        assert_eq!(syms, vec!["app.util.helper", "app.util.other"]);
    }

    #[test]
    fn bare_function_gets_file_role_only() {
        let idx = repo(&[("m.py", "def f(x):\n    return x\n")], &[]);
        let p = CompletionPoint::new(&idx, "m", "f").unwrap();
        let ctx = identify_context(&p, &idx, &ContextOptions::default()).unwrap();
        assert_eq!(ctx.items.len(), 1);
        assert_eq!(ctx.items[0].kind, ContextKind::FileRole);
        assert_eq!(ctx.items[0].payload, "Defines: f");
    }

    #[test]
    fn file_role_forms() {
        let m = crate::syntax::parse_module("\"\"\"Entry point.\"\"\"\n", "m.py").unwrap();
        assert_eq!(summarize_file_role(&m), "Entry point.");
        let m = crate::syntax::parse_module("class Service:\n    pass\n\ndef helper():\n    pass\n", "m.py").unwrap();
        assert_eq!(summarize_file_role(&m), "Defines: Service, helper");
        let m = crate::syntax::parse_module("", "m.py").unwrap();
        assert_eq!(summarize_file_role(&m), "Defines: (nothing)");
    }

    #[test]
    fn local_types_conservative() {
        let idx = repo(
            &[(
                "m.py",
                "class Service:\n    pass\n\ndef helper() -> Service:\n    return Service()\n\ndef f(svc: Service, n):\n    s = Service()\n    x = helper()\n",
            )],
            &[],
        );
        let f = idx.module("m").unwrap().function("f").unwrap();
        let t = infer_local_types(f, "m", &idx);
        assert_eq!(t.len(), 2);
        assert_eq!(t["svc"], "Service");
        assert_eq!(t["s"], "Service");
    }

    #[test]
    fn rank_empty() {
        let idx = fixture();
        let p = CompletionPoint::new(&idx, "app.main", "log_state").unwrap();
        assert!(rank_relevance(Vec::new(), &p, &idx, &RelevanceWeights::default()).is_empty());
    }

    #[test]
    fn members_capped_alphabetically() {
        let mut src = String::from("class Big:\n");
        for name in ["m", "c", "k", "a", "l", "b", "j", "d", "i", "e", "h", "f", "g"] {
            src.push_str(&format!("    def {name}(self):\n        pass\n"));
        }
        let idx = repo(&[("big.py", &src)], &[]);
        let out = render_symbol(&idx, idx.symbol("big.Big").unwrap(), 10);
        assert!(out.contains("def j(self)"));
        assert!(!out.contains("def k(self)"));
        assert_eq!(out.matches("def ").count(), 10);
    }

    #[test]
    fn json_shape() {
        let idx = fixture();
        let p = CompletionPoint::new(&idx, "app.main", "log_state").unwrap();
        let ctx = identify_context(&p, &idx, &ContextOptions::default()).unwrap();
        let v = ctx.to_json();
        assert_eq!(v["point"]["line"], 6);
        assert!(v["items"][0]["score"].is_number());
        assert_eq!(serde_json::to_string(&v).unwrap(), serde_json::to_string(&ctx.to_json()).unwrap());
    }
}

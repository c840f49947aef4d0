//! Import classification and scoped name resolution.

use serde::Serialize;

use super::{RepoIndex, Symbol, SymbolKind};
use crate::syntax::{ClassDecl, FunctionDecl, ImportDecl, ImportForm, ModulePath};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ImportResolution {
    UserDefined { module: String },
    ThirdParty { package: String, version: Option<String> },
    Unresolved,
}

/// Where a name is looked up: a module, optionally narrowed to a class,
/// a function, or a method (`Class.method`) inside it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Scope {
    pub module: String,
    pub enclosing: Option<String>,
}

impl Scope {
    pub fn module(module: &str) -> Scope {
        Scope { module: module.to_string(), enclosing: None }
    }

    pub fn within(module: &str, enclosing: &str) -> Scope {
        Scope { module: module.to_string(), enclosing: Some(enclosing.to_string()) }
    }
}

/// A parameter or function-local binding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LocalVar {
    pub name: String,
    pub type_text: Option<String>,
    /// Qualified name of the class the value is an instance of, if known.
    pub class: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resolution {
    Symbol(Symbol),
    Local(LocalVar),
    /// A directory of modules without its own `__init__.py`.
    Package {
        path: String,
    },
    /// Anything reached through a third-party import.
    External {
        package: String,
    },
    Builtin {
        name: String,
    },
    Unresolved,
}

impl Resolution {
    pub fn is_resolved(&self) -> bool {
        !matches!(self, Resolution::Unresolved)
    }

    pub fn symbol(&self) -> Option<&Symbol> {
        match self {
            Resolution::Symbol(s) => Some(s),
            _ => None,
        }
    }

    /// Class of the value this resolves to when it is a typed instance.
    pub fn instance_class<'a>(&'a self, index: &'a RepoIndex) -> Option<String> {
        match self {
            Resolution::Local(v) => v.class.clone(),
            Resolution::Symbol(s) if s.kind == SymbolKind::Variable => {
                let text = s.type_text.as_deref()?;
                index.resolve_type(text, &s.declaration.module)
            }
            _ => None,
        }
    }
}

pub const BUILTINS: &[&str] = &[
    "abs",
    "all",
    "any",
    "ascii",
    "bin",
    "bool",
    "breakpoint",
    "bytearray",
    "bytes",
    "callable",
    "chr",
    "classmethod",
    "compile",
    "complex",
    "delattr",
    "dict",
    "dir",
    "divmod",
    "enumerate",
    "eval",
    "exec",
    "filter",
    "float",
    "format",
    "frozenset",
    "getattr",
    "globals",
    "hasattr",
    "hash",
    "help",
    "hex",
    "id",
    "input",
    "int",
    "isinstance",
    "issubclass",
    "iter",
    "len",
    "list",
    "locals",
    "map",
    "max",
    "memoryview",
    "min",
    "next",
    "object",
    "oct",
    "open",
    "ord",
    "pow",
    "print",
    "property",
    "range",
    "repr",
    "reversed",
    "round",
    "set",
    "setattr",
    "slice",
    "sorted",
    "staticmethod",
    "str",
    "sum",
    "super",
    "tuple",
    "type",
    "vars",
    "zip",
    "__import__",
    "__name__",
    "__file__",
    "__doc__",
    "__package__",
    "__spec__",
    "__debug__",
    "__builtins__",
    "NotImplemented",
    "Ellipsis",
    "BaseException",
    "Exception",
    "ArithmeticError",
    "AssertionError",
    "AttributeError",
    "BufferError",
    "EOFError",
    "FileExistsError",
    "FileNotFoundError",
    "FloatingPointError",
    "GeneratorExit",
    "ImportError",
    "IndexError",
    "KeyError",
    "KeyboardInterrupt",
    "LookupError",
    "MemoryError",
    "ModuleNotFoundError",
    "NameError",
    "NotImplementedError",
    "OSError",
    "OverflowError",
    "PermissionError",
    "RecursionError",
    "ReferenceError",
    "RuntimeError",
    "StopIteration",
    "StopAsyncIteration",
    "SyntaxError",
    "SystemError",
    "SystemExit",
    "TimeoutError",
    "TypeError",
    "UnboundLocalError",
    "UnicodeError",
    "UnicodeDecodeError",
    "UnicodeEncodeError",
    "ValueError",
    "ZeroDivisionError",
    "ConnectionError",
    "IOError",
    "Warning",
    "UserWarning",
    "DeprecationWarning",
    "RuntimeWarning",
];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

const MAX_DEPTH: usize = 16;

/// Absolute dotted path of an import's module, or `None` when relative dots
/// climb above the repository root.
pub(crate) fn absolute_module(path: &ModulePath, importing: &str, importing_is_package: bool) -> Option<String> {
    if path.dots == 0 {
        return (!path.dotted.is_empty()).then(|| path.dotted.clone());
    }
    let mut parts: Vec<&str> = importing.split('.').collect();
    let strip = if importing_is_package { path.dots - 1 } else { path.dots };
    if strip > parts.len() {
        return None;
    }
    parts.truncate(parts.len() - strip);
    if !path.dotted.is_empty() {
        parts.extend(path.dotted.split('.'));
    }
    let joined = parts.join(".");
    (!joined.is_empty()).then_some(joined)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
}

impl RepoIndex {
    pub fn resolve_import(&self, decl: &ImportDecl, importing_module: &str) -> ImportResolution {
        let Some(abs) = absolute_module(&decl.module_path, importing_module, self.is_package(importing_module)) else {
            return ImportResolution::Unresolved;
        };
        if decl.form == ImportForm::From {
            for (name, _) in &decl.imported_names {
                let sub = format!("{abs}.{name}");
                if self.modules.contains_key(&sub) {
                    return ImportResolution::UserDefined { module: sub };
                }
            }
        }
        if self.modules.contains_key(&abs) {
            return ImportResolution::UserDefined { module: abs };
        }
        if decl.module_path.dots > 0 || self.has_module_or_package(&abs) {
            return ImportResolution::Unresolved;
        }
        let package = abs.split('.').next().unwrap_or_default().trim().to_string();
        if package.is_empty() || !is_identifier(&package) {
            return ImportResolution::Unresolved;
        }
        let version = self.version_of(&package);
        ImportResolution::ThirdParty { package, version }
    }

    /// Resolve an identifier chain from `scope`.
    pub fn resolve_name(&self, chain: &[String], scope: &Scope) -> Resolution {
        self.walk_chain(chain, scope).pop().unwrap_or(Resolution::Unresolved)
    }

    /// Resolution of every prefix of `chain` (same length as `chain`).
    pub fn walk_chain(&self, chain: &[String], scope: &Scope) -> Vec<Resolution> {
        let mut out = Vec::with_capacity(chain.len());
        let Some(head) = chain.first() else { return out };
        let mut current = self.resolve_head(head, scope);
        out.push(current.clone());
        for name in &chain[1..] {
            current = self.member_of(&current, name, 0);
            out.push(current.clone());
        }
        out
    }

    /// Resolve a dotted expression (`a.b.C`) in `scope`.
    pub fn resolve_dotted(&self, dotted: &str, scope: &Scope) -> Resolution {
        let chain: Vec<String> = dotted.split('.').map(|s| s.trim().to_string()).collect();
        if chain.iter().any(|s| s.is_empty()) {
            return Resolution::Unresolved;
        }
        self.resolve_name(&chain, scope)
    }

    /// Class named by an annotation or constructor text in `module`.
    /// `Optional[X]`, `X | None` and quoted forward references unwrap to `X`.
    pub fn resolve_type(&self, text: &str, module: &str) -> Option<String> {
        let mut t = text.trim().trim_matches(|c| c == '"' || c == '\'').trim().to_string();
        if let Some(inner) = t.strip_prefix("Optional[").and_then(|r| r.strip_suffix(']')) {
            t = inner.trim().to_string();
        } else if let Some(inner) = t.strip_prefix("typing.Optional[").and_then(|r| r.strip_suffix(']')) {
            t = inner.trim().to_string();
        }
        if t.contains('|') {
            let parts: Vec<&str> = t.split('|').map(str::trim).filter(|p| *p != "None").collect();
            if parts.len() != 1 {
                return None;
            }
            t = parts[0].to_string();
        }
        let t = t.trim_matches(|c| c == '"' || c == '\'');
        if t.is_empty() || !t.split('.').all(is_identifier) {
            return None;
        }
        match self.resolve_dotted(t, &Scope::module(module)) {
            Resolution::Symbol(s) if s.kind == SymbolKind::Class => Some(s.qualified_name),
            _ => None,
        }
    }

    fn resolve_head(&self, name: &str, scope: &Scope) -> Resolution {
        let Some(module) = self.modules.get(&scope.module) else {
            return Resolution::Unresolved;
        };
        let (class, function) = enclosing(module, scope.enclosing.as_deref());
        if let Some(f) = function {
            if let Some(r) = self.resolve_local(name, f, class, &scope.module) {
                return r;
            }
        }
        if let Some(c) = class {
            let cqn = format!("{}.{}", scope.module, c.name);
            if let Some(cls) = self.symbols.get(&cqn) {
                if let Ok(Some(member)) = self.lookup_member(cls, name) {
                    return Resolution::Symbol(member);
                }
            }
        }
        let r = self.module_namespace(&scope.module, name, 0);
        if r.is_resolved() {
            return r;
        }
        if is_builtin(name) {
            return Resolution::Builtin { name: name.to_string() };
        }
        Resolution::Unresolved
    }

    fn resolve_local(
        &self,
        name: &str,
        f: &FunctionDecl,
        class: Option<&ClassDecl>,
        module: &str,
    ) -> Option<Resolution> {
        enum Binding<'a> {
            Param(usize),
            Local(&'a crate::syntax::LocalBinding),
        }
        let mut found = None;
        for (i, p) in f.params.iter().enumerate() {
            if p.name == name {
                found = Some(Binding::Param(i));
            }
        }
        for l in &f.locals {
            if l.name == name {
                found = Some(Binding::Local(l));
            }
        }
        let var = match found? {
            Binding::Param(i) => {
                let p = &f.params[i];
                let receiver = i == 0 && f.is_method && !f.is_staticmethod() && class.is_some();
                if receiver && p.annotation.is_none() {
                    let c = class.expect("receiver implies class");
                    let cqn = format!("{module}.{}", c.name);
                    if f.is_classmethod() {
                        if let Some(sym) = self.symbols.get(&cqn) {
                            return Some(Resolution::Symbol(sym.clone()));
                        }
                    }
                    LocalVar { name: name.to_string(), type_text: Some(c.name.clone()), class: Some(cqn) }
                } else {
                    let class = p.annotation.as_deref().and_then(|a| self.resolve_type(a, module));
                    LocalVar { name: name.to_string(), type_text: p.annotation.clone(), class }
                }
            }
            Binding::Local(l) => {
                if let Some(a) = &l.annotation {
                    LocalVar { name: name.to_string(), type_text: Some(a.clone()), class: self.resolve_type(a, module) }
                } else if let Some(ctor) = &l.constructor {
                    match self.resolve_type(ctor, module) {
                        Some(cqn) => {
                            LocalVar { name: name.to_string(), type_text: Some(ctor.clone()), class: Some(cqn) }
                        }
                        None => LocalVar { name: name.to_string(), type_text: None, class: None },
                    }
                } else {
                    LocalVar { name: name.to_string(), type_text: None, class: None }
                }
            }
        };
        Some(Resolution::Local(var))
    }

    /// Module-level binding of `name` inside `module`: declarations first,
    /// then imports (last one wins), then star imports.
    fn module_namespace(&self, module: &str, name: &str, depth: usize) -> Resolution {
        if depth > MAX_DEPTH {
            return Resolution::Unresolved;
        }
        let Some(ast) = self.modules.get(module) else {
            return Resolution::Unresolved;
        };
        if let Some(sym) = self.symbols.get(&format!("{module}.{name}")) {
            if sym.kind != SymbolKind::Module && sym.declaration.module == module {
                return Resolution::Symbol(sym.clone());
            }
        }
        let is_pkg = self.is_package(module);
        for decl in ast.imports.iter().rev() {
            for (bound, item) in decl.bound_names() {
                if bound != name {
                    continue;
                }
                return match (decl.form, item) {
                    (ImportForm::Plain, _) => {
                        let target = if decl.module_alias.is_some() {
                            decl.module_path.dotted.clone()
                        } else {
                            decl.module_path.dotted.split('.').next().unwrap_or_default().to_string()
                        };
                        self.module_or_package(&target)
                    }
                    (ImportForm::From, Some(item)) => {
                        let Some(abs) = absolute_module(&decl.module_path, module, is_pkg) else {
                            return Resolution::Unresolved;
                        };
                        let sub = format!("{abs}.{item}");
                        if self.has_module_or_package(&sub) {
                            return self.module_or_package(&sub);
                        }
                        if self.modules.contains_key(&abs) {
                            self.module_namespace(&abs, &item, depth + 1)
                        } else if decl.module_path.dots > 0 || self.has_module_or_package(&abs) {
                            Resolution::Unresolved
                        } else {
                            self.module_or_package(&abs)
                        }
                    }
                    (ImportForm::From, None) => Resolution::Unresolved,
                };
            }
        }
        if name.starts_with('_') {
            return Resolution::Unresolved;
        }
        for decl in ast.imports.iter().rev() {
            if decl.form != ImportForm::From || !decl.imported_names.iter().any(|(n, _)| n == "*") {
                continue;
            }
            let Some(abs) = absolute_module(&decl.module_path, module, is_pkg) else { continue };
            if self.modules.contains_key(&abs) {
                let r = self.module_namespace(&abs, name, depth + 1);
                if r.is_resolved() {
                    return r;
                }
            } else if decl.module_path.dots == 0 && !self.has_module_or_package(&abs) {
                return self.module_or_package(&abs);
            }
        }
        Resolution::Unresolved
    }

    /// An indexed module, an in-repo package directory, or an external one.
    fn module_or_package(&self, dotted: &str) -> Resolution {
        if let Some(sym) = self.symbols.get(dotted).filter(|s| s.kind == SymbolKind::Module) {
            return Resolution::Symbol(sym.clone());
        }
        if self.has_module_or_package(dotted) {
            return Resolution::Package { path: dotted.to_string() };
        }
        let package = dotted.split('.').next().unwrap_or_default();
        if package.is_empty() {
            Resolution::Unresolved
        } else {
            Resolution::External { package: package.to_string() }
        }
    }

    fn member_of(&self, base: &Resolution, name: &str, depth: usize) -> Resolution {
        match base {
            Resolution::Symbol(s) => match s.kind {
                SymbolKind::Class => self.class_member(&s.qualified_name, name),
                SymbolKind::Module => {
                    let r = self.module_namespace(&s.qualified_name, name, depth);
                    if r.is_resolved() {
                        return r;
                    }
                    self.submodule(&s.qualified_name, name)
                }
                SymbolKind::Variable => match base.instance_class(self) {
                    Some(cqn) => self.class_member(&cqn, name),
                    None => Resolution::Unresolved,
                },
                SymbolKind::Function | SymbolKind::Method => Resolution::Unresolved,
            },
            Resolution::Local(v) => match &v.class {
                Some(cqn) => self.class_member(cqn, name),
                None => Resolution::Unresolved,
            },
            Resolution::Package { path } => self.submodule(path, name),
            Resolution::External { package } => Resolution::External { package: package.clone() },
            Resolution::Builtin { .. } | Resolution::Unresolved => Resolution::Unresolved,
        }
    }

    fn submodule(&self, parent: &str, name: &str) -> Resolution {
        let sub = format!("{parent}.{name}");
        if self.has_module_or_package(&sub) {
            self.module_or_package(&sub)
        } else {
            Resolution::Unresolved
        }
    }

    fn class_member(&self, class_qn: &str, name: &str) -> Resolution {
        let Some(cls) = self.symbols.get(class_qn) else { return Resolution::Unresolved };
        match self.lookup_member(cls, name) {
            Ok(Some(member)) => Resolution::Symbol(member),
            _ => Resolution::Unresolved,
        }
    }
}

/// The class and function an enclosing name refers to.
fn enclosing<'a>(
    module: &'a crate::syntax::ModuleAst,
    enclosing: Option<&str>,
) -> (Option<&'a ClassDecl>, Option<&'a FunctionDecl>) {
    let Some(name) = enclosing else { return (None, None) };
    if let Some((class, function)) = module.find_function(name) {
        return (class, Some(function));
    }
    (module.class(name), None)
}

//! Repository-wide index: modules, symbol table, class hierarchy, and the
//! split between in-repo and third-party imports.
//!
//! A [`RepoIndex`] is immutable once built. Variants with one module's
//! source replaced are produced by [`RepoIndex::with_module_source`], which
//! returns a new index.

mod hierarchy;
mod requirements;
mod resolve;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;
use walkdir::WalkDir;

use crate::syntax::{normalize_newlines, parse_module, LineSpan, ModuleAst, SyntaxError};

pub use hierarchy::CycleError;
pub use requirements::{normalize_package_name, parse_requirements, third_party_versions};
pub use resolve::{is_builtin, ImportResolution, LocalVar, Resolution, Scope, BUILTINS};

/// Directories skipped unless the caller overrides the ignore list.
pub const DEFAULT_IGNORE: &[&str] = &[".git", "__pycache__", "venv", ".venv"];

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("cannot read repository root {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid ignore pattern {pattern:?}: {message}")]
    Pattern { pattern: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    Class,
    Function,
    Method,
    Variable,
    Module,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Declaration {
    pub module: String,
    pub span: LineSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Symbol {
    pub qualified_name: String,
    pub kind: SymbolKind,
    pub declaration: Declaration,
    pub signature_text: Option<String>,
    pub docstring: Option<String>,
    /// Annotation or constructor text for variables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_text: Option<String>,
}

impl Symbol {
    /// Last component of the qualified name.
    pub fn name(&self) -> &str {
        self.qualified_name.rsplit('.').next().unwrap_or(&self.qualified_name)
    }

    /// Qualified name of the owning class for methods and class attributes.
    pub fn owner(&self) -> Option<&str> {
        self.qualified_name.rsplit_once('.').map(|(o, _)| o)
    }
}

/// A file that could not be indexed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

/// A parsed file's source and AST, or the reason it was skipped.
type Parsed = Result<(String, ModuleAst), String>;

#[derive(Debug, Clone)]
pub struct RepoIndex {
    root: PathBuf,
    modules: BTreeMap<String, ModuleAst>,
    sources: BTreeMap<String, String>,
    packages: BTreeSet<String>,
    symbols: BTreeMap<String, Symbol>,
    bases: BTreeMap<String, Vec<String>>,
    hierarchy: BTreeMap<String, Vec<String>>,
    third_party: BTreeMap<String, Option<String>>,
    requirements: BTreeMap<String, String>,
    errors: Vec<FileError>,
}

/// Index every `.py` file under `root`, skipping paths whose components
/// match any of the `ignore` glob patterns.
pub fn build_repo_index(root: &Path, ignore: &[String]) -> Result<RepoIndex, IndexError> {
    let meta = fs::metadata(root).map_err(|source| IndexError::Io { path: root.to_path_buf(), source })?;
    if !meta.is_dir() {
        return Err(IndexError::Io {
            path: root.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let ignore_set = build_globset(ignore)?;
    let mut files = Vec::new();
    let walker = WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| {
        let Ok(rel) = e.path().strip_prefix(root) else { return true };
        rel.as_os_str().is_empty() || !is_ignored(&ignore_set, rel)
    });
    for entry in walker {
        let Ok(entry) = entry else { continue };
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "py") {
            let rel = entry.path().strip_prefix(root).expect("walked under root");
            files.push(rel_string(rel));
        }
    }
    let loaded: Vec<(String, Result<String, String>)> = files
        .into_par_iter()
        .map(|rel| {
            let text = fs::read(root.join(&rel))
                .map_err(|e| e.to_string())
                .and_then(|bytes| String::from_utf8(bytes).map_err(|_| "file is not valid UTF-8".to_string()));
            (rel, text)
        })
        .collect();
    let requirements = third_party_versions(root);
    Ok(RepoIndex::assemble(root.to_path_buf(), loaded, requirements))
}

fn build_globset(patterns: &[String]) -> Result<GlobSet, IndexError> {
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        let glob = Glob::new(p).map_err(|e| IndexError::Pattern { pattern: p.clone(), message: e.to_string() })?;
        b.add(glob);
    }
    b.build().map_err(|e| IndexError::Pattern { pattern: patterns.join(","), message: e.to_string() })
}

fn is_ignored(set: &GlobSet, rel: &Path) -> bool {
    set.is_match(rel) || rel.components().any(|c| set.is_match(Path::new(c.as_os_str())))
}

fn rel_string(rel: &Path) -> String {
    rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}

/// `app/service.py` → `app.service`; `app/__init__.py` → `app`.
pub fn module_path_for_file(rel: &str) -> String {
    let trimmed = rel.strip_suffix(".py").unwrap_or(rel);
    let trimmed = trimmed.strip_suffix("/__init__").unwrap_or(trimmed);
    if trimmed == "__init__" {
        return String::new();
    }
    trimmed.replace('/', ".")
}

impl RepoIndex {
    /// Build an index from in-memory files (`(relative path, source)`).
    pub fn from_sources(
        root: impl Into<PathBuf>,
        files: impl IntoIterator<Item = (String, String)>,
        requirements: BTreeMap<String, String>,
    ) -> RepoIndex {
        let loaded = files.into_iter().map(|(p, s)| (p, Ok(s))).collect();
        RepoIndex::assemble(root.into(), loaded, requirements)
    }

    fn assemble(
        root: PathBuf,
        loaded: Vec<(String, Result<String, String>)>,
        requirements: BTreeMap<String, String>,
    ) -> RepoIndex {
        let parsed: Vec<(String, Parsed)> = loaded
            .into_par_iter()
            .map(|(rel, text)| {
                let result = text.and_then(|t| {
                    let source = normalize_newlines(&t);
                    parse_module(&source, &rel).map(|m| (source, m)).map_err(|e| e.to_string())
                });
                (rel, result)
            })
            .collect();
        let mut index = RepoIndex {
            root,
            modules: BTreeMap::new(),
            sources: BTreeMap::new(),
            packages: BTreeSet::new(),
            symbols: BTreeMap::new(),
            bases: BTreeMap::new(),
            hierarchy: BTreeMap::new(),
            third_party: BTreeMap::new(),
            requirements,
            errors: Vec::new(),
        };
        for (rel, result) in parsed {
            match result {
                Ok((source, module)) => {
                    let dotted = module_path_for_file(&rel);
                    if dotted.is_empty() {
                        continue;
                    }
                    if rel.ends_with("__init__.py") {
                        index.packages.insert(dotted.clone());
                    }
                    index.sources.insert(dotted.clone(), source);
                    index.modules.insert(dotted, module);
                }
                Err(message) => index.errors.push(FileError { path: rel, message }),
            }
        }
        index.finalize();
        index
    }

    /// Recompute everything derived from `modules`.
    fn finalize(&mut self) {
        self.symbols = build_symbols(&self.modules);
        self.bases.clear();
        self.hierarchy.clear();
        self.third_party.clear();
        let mut bases = BTreeMap::new();
        for (mpath, module) in &self.modules {
            for class in &module.classes {
                let qn = format!("{mpath}.{}", class.name);
                let scope = Scope::module(mpath);
                let resolved: Vec<String> = class
                    .bases
                    .iter()
                    .filter_map(|b| match self.resolve_dotted(b, &scope) {
                        Resolution::Symbol(s) if s.kind == SymbolKind::Class => Some(s.qualified_name),
                        _ => None,
                    })
                    .collect();
                bases.insert(qn, resolved);
            }
        }
        self.bases = bases;
        let classes: Vec<String> = self.bases.keys().cloned().collect();
        for class in classes {
            if let Ok(lin) = hierarchy::linearize(&class, &self.bases) {
                self.hierarchy.insert(class, lin);
            }
        }
        let mut third_party = BTreeMap::new();
        for (mpath, module) in &self.modules {
            for decl in &module.imports {
                if let ImportResolution::ThirdParty { package, version } = self.resolve_import(decl, mpath) {
                    third_party.insert(package, version);
                }
            }
        }
        self.third_party = third_party;
    }

    /// A new index with `module`'s source replaced (the module is added if
    /// it did not exist).
    pub fn with_module_source(&self, module: &str, source: &str) -> Result<RepoIndex, SyntaxError> {
        let rel = match self.modules.get(module) {
            Some(m) => m.path.clone(),
            None => format!("{}.py", module.replace('.', "/")),
        };
        let source = normalize_newlines(source);
        let parsed = parse_module(&source, &rel)?;
        let mut next = self.clone();
        next.modules.insert(module.to_string(), parsed);
        next.sources.insert(module.to_string(), source);
        next.finalize();
        Ok(next)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn modules(&self) -> &BTreeMap<String, ModuleAst> {
        &self.modules
    }

    pub fn module(&self, path: &str) -> Option<&ModuleAst> {
        self.modules.get(path)
    }

    /// Normalized source text of an indexed module.
    pub fn source(&self, module: &str) -> Option<&str> {
        self.sources.get(module).map(String::as_str)
    }

    pub fn is_package(&self, module: &str) -> bool {
        self.packages.contains(module)
    }

    pub fn symbols(&self) -> &BTreeMap<String, Symbol> {
        &self.symbols
    }

    pub fn symbol(&self, qualified_name: &str) -> Option<&Symbol> {
        self.symbols.get(qualified_name)
    }

    /// Class → linearized ancestors (the class itself first). Classes caught
    /// in a base cycle are absent.
    pub fn hierarchy(&self) -> &BTreeMap<String, Vec<String>> {
        &self.hierarchy
    }

    /// Class → directly resolved in-repo base classes.
    pub fn direct_bases(&self) -> &BTreeMap<String, Vec<String>> {
        &self.bases
    }

    pub fn third_party(&self) -> &BTreeMap<String, Option<String>> {
        &self.third_party
    }

    pub fn requirements(&self) -> &BTreeMap<String, String> {
        &self.requirements
    }

    pub fn errors(&self) -> &[FileError] {
        &self.errors
    }

    /// True if `path` is an indexed module or a directory prefix of one.
    pub fn has_module_or_package(&self, path: &str) -> bool {
        if path.is_empty() {
            return false;
        }
        if self.modules.contains_key(path) {
            return true;
        }
        let prefix = format!("{path}.");
        self.modules.range(prefix.clone()..).next().is_some_and(|(k, _)| k.starts_with(&prefix))
    }

    pub(crate) fn version_of(&self, package: &str) -> Option<String> {
        let wanted = normalize_package_name(package);
        self.requirements.iter().find(|(name, _)| normalize_package_name(name) == wanted).map(|(_, v)| v.clone())
    }

    /// Module containing a symbol's declaration.
    pub fn module_of(&self, symbol: &Symbol) -> Option<&ModuleAst> {
        self.modules.get(&symbol.declaration.module)
    }
}

fn build_symbols(modules: &BTreeMap<String, ModuleAst>) -> BTreeMap<String, Symbol> {
    let mut symbols = BTreeMap::new();
    for (mpath, module) in modules {
        // Source order so later definitions replace earlier ones.
        let mut decls: Vec<(usize, Symbol)> = Vec::new();
        for v in &module.variables {
            decls.push((
                v.line,
                Symbol {
                    qualified_name: format!("{mpath}.{}", v.name),
                    kind: SymbolKind::Variable,
                    declaration: Declaration { module: mpath.clone(), span: LineSpan::new(v.line, v.line) },
                    signature_text: None,
                    docstring: None,
                    type_text: v.type_text().map(str::to_string),
                },
            ));
        }
        for f in &module.functions {
            decls.push((
                f.span.first,
                Symbol {
                    qualified_name: format!("{mpath}.{}", f.name),
                    kind: SymbolKind::Function,
                    declaration: Declaration { module: mpath.clone(), span: f.span },
                    signature_text: Some(f.signature_text()),
                    docstring: f.docstring.clone(),
                    type_text: None,
                },
            ));
        }
        for c in &module.classes {
            let cqn = format!("{mpath}.{}", c.name);
            decls.push((
                c.span.first,
                Symbol {
                    qualified_name: cqn.clone(),
                    kind: SymbolKind::Class,
                    declaration: Declaration { module: mpath.clone(), span: c.span },
                    signature_text: Some(c.signature_text()),
                    docstring: c.docstring.clone(),
                    type_text: None,
                },
            ));
            let mut members: Vec<(usize, Symbol)> = Vec::new();
            for a in &c.attributes {
                members.push((
                    a.line,
                    Symbol {
                        qualified_name: format!("{cqn}.{}", a.name),
                        kind: SymbolKind::Variable,
                        declaration: Declaration { module: mpath.clone(), span: LineSpan::new(a.line, a.line) },
                        signature_text: None,
                        docstring: None,
                        type_text: a.type_text().map(str::to_string),
                    },
                ));
            }
            for m in &c.methods {
                members.push((
                    m.span.first,
                    Symbol {
                        qualified_name: format!("{cqn}.{}", m.name),
                        kind: SymbolKind::Method,
                        declaration: Declaration { module: mpath.clone(), span: m.span },
                        signature_text: Some(m.signature_text()),
                        docstring: m.docstring.clone(),
                        type_text: None,
                    },
                ));
            }
            // Members follow their class so the class symbol is in place.
            members.sort_by_key(|(line, _)| *line);
            for (_, s) in members {
                decls.push((c.span.first, s));
            }
        }
        decls.sort_by_key(|(line, _)| *line);
        for (_, s) in decls {
            symbols.insert(s.qualified_name.clone(), s);
        }
    }
    // Modules last: a module path always names the module.
    for (mpath, module) in modules {
        symbols.insert(
            mpath.clone(),
            Symbol {
                qualified_name: mpath.clone(),
                kind: SymbolKind::Module,
                declaration: Declaration { module: mpath.clone(), span: LineSpan::new(1, module.line_count.max(1)) },
                signature_text: None,
                docstring: module.module_docstring.clone(),
                type_text: None,
            },
        );
    }
    symbols
}

#![allow(dead_code)]

use std::path::PathBuf;

use crossfile_core::index::{build_repo_index, RepoIndex, DEFAULT_IGNORE};
use crossfile_core::syntax::{dedent, FunctionDecl};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_index(name: &str) -> RepoIndex {
    let ignore: Vec<String> = DEFAULT_IGNORE.iter().map(|s| s.to_string()).collect();
    build_repo_index(&fixtures_dir().join(name), &ignore).expect("fixture indexes")
}

pub fn fixture_indexes() -> Vec<RepoIndex> {
    vec![fixture_index("app"), fixture_index("shop")]
}

/// A function of a fixture together with its real body.
#[derive(Debug, Clone)]
pub struct Target {
    pub module: String,
    pub function: String,
    pub body: String,
}

pub fn body_of(index: &RepoIndex, module: &str, decl: &FunctionDecl) -> String {
    let source = index.source(module).unwrap();
    let lines: Vec<&str> = source.lines().collect();
    let text: String = lines[decl.body_span.first - 1..decl.body_span.last].iter().map(|l| format!("{l}\n")).collect();
    dedent(&text)
}

/// Every function and method in module order.
pub fn targets(index: &RepoIndex) -> Vec<Target> {
    let mut out = Vec::new();
    for (module, ast) in index.modules() {
        for f in &ast.functions {
            out.push(Target { module: module.clone(), function: f.name.clone(), body: body_of(index, module, f) });
        }
        for c in &ast.classes {
            for m in &c.methods {
                out.push(Target {
                    module: module.clone(),
                    function: format!("{}.{}", c.name, m.name),
                    body: body_of(index, module, m),
                });
            }
        }
    }
    out
}

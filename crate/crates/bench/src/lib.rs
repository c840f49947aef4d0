//! Inputs shared by the benchmarks.

use crossfile_core::index::RepoIndex;
use crossfile_core::synth::generated_repo;

/// An in-memory index of a generated repository.
pub fn generated_index(files: usize, lines_per_file: usize) -> RepoIndex {
    RepoIndex::from_sources("/bench", generated_repo(files, lines_per_file), Default::default())
}

/// Every function body of the generated repository, dedented.
pub fn generated_bodies(files: usize, lines_per_file: usize) -> Vec<String> {
    let index = generated_index(files, lines_per_file);
    let mut out = Vec::new();
    for (module, ast) in index.modules() {
        let source = index.source(module).unwrap_or_default();
        let lines: Vec<&str> = source.lines().collect();
        for f in ast.functions.iter().chain(ast.classes.iter().flat_map(|c| c.methods.iter())) {
            let body = lines[f.body_span.first - 1..f.body_span.last].join("\n");
            out.push(crossfile_core::refine::normalize_body(&body));
        }
    }
    out
}

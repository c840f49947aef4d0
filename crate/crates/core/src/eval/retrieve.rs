//! Lexical chunk retrieval for the RAG baseline.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::index::RepoIndex;
use crate::syntax::is_keyword;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chunk {
    pub path: String,
    pub module: String,
    /// 1-based, inclusive.
    pub start_line: usize,
    pub end_line: usize,
    pub text: String,
    pub score: f64,
}

/// Identifier-like words, keywords excluded.
pub fn identifier_set(text: &str) -> BTreeSet<&str> {
    let mut out = BTreeSet::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            if !is_keyword(word) {
                out.insert(word);
            }
        } else if c.is_ascii_digit() {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    out
}

pub fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// `(start, end)` 0-based half-open windows of `chunk_lines` lines with a
/// stride of `ceil(chunk_lines / 2)`.
pub fn windows(line_count: usize, chunk_lines: usize) -> Vec<(usize, usize)> {
    let chunk_lines = chunk_lines.max(1);
    let stride = chunk_lines.div_ceil(2);
    let mut out = Vec::new();
    let mut start = 0;
    while start < line_count {
        let end = (start + chunk_lines).min(line_count);
        out.push((start, end));
        if end == line_count {
            break;
        }
        start += stride;
    }
    out
}

/// Top-`k` chunks from every module except `exclude_module`, by Jaccard
/// similarity of identifier sets with `query`.
pub fn retrieve_chunks(
    index: &RepoIndex,
    query: &str,
    exclude_module: Option<&str>,
    k: usize,
    chunk_lines: usize,
) -> Vec<Chunk> {
    let q = identifier_set(query);
    let modules: Vec<(&String, &str)> = index
        .modules()
        .iter()
        .filter(|(m, _)| Some(m.as_str()) != exclude_module)
        .map(|(m, ast)| (m, ast.path.as_str()))
        .collect();
    let mut chunks: Vec<Chunk> = modules
        .par_iter()
        .flat_map_iter(|(module, path)| {
            let source = index.source(module).unwrap_or_default();
            let lines: Vec<&str> = source.lines().collect();
            windows(lines.len(), chunk_lines)
                .into_iter()
                .map(|(s, e)| {
                    let text = lines[s..e].join("\n");
                    let score = jaccard(&q, &identifier_set(&text));
                    Chunk {
                        path: path.to_string(),
                        module: module.to_string(),
                        start_line: s + 1,
                        end_line: e,
                        text,
                        score,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    chunks.sort_by(|a, b| {
        b.score.total_cmp(&a.score).then_with(|| a.path.cmp(&b.path)).then_with(|| a.start_line.cmp(&b.start_line))
    });
    chunks.truncate(k);
    chunks
}

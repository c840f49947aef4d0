use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::refine::normalize_body;

/// Gold bodies must be shorter than this many lines.
pub const MAX_GOLD_LINES: usize = 15;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    repo: PathBuf,
    module: String,
    function: String,
    gold_body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EvalTask {
    pub repo: PathBuf,
    pub module: String,
    pub function: String,
    /// Dedented, without surrounding blank lines.
    pub gold_body: String,
    pub gold_lines: usize,
    /// 1-based line in the dataset file.
    pub source_line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub tasks: Vec<EvalTask>,
    pub warnings: Vec<String>,
}

/// Parse JSONL text. Relative repo paths are taken relative to `base`.
pub fn parse_dataset(text: &str, base: &Path) -> Result<Dataset, DatasetError> {
    let mut out = Dataset::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: Record =
            serde_json::from_str(raw).map_err(|e| DatasetError::Format { line, message: e.to_string() })?;
        let gold_body = normalize_body(&rec.gold_body);
        let gold_lines = gold_body.lines().count();
        if gold_lines >= MAX_GOLD_LINES {
            out.warnings.push(format!(
                "line {line}: {}.{} skipped, gold body has {gold_lines} lines (must be under {MAX_GOLD_LINES})",
                rec.module, rec.function
            ));
            continue;
        }
        let repo = if rec.repo.is_absolute() { rec.repo } else { base.join(rec.repo) };
        out.tasks.push(EvalTask {
            repo,
            module: rec.module,
            function: rec.function,
            gold_body,
            gold_lines,
            source_line: line,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    parse_dataset(&text, path.parent().unwrap_or(Path::new(".")))
}

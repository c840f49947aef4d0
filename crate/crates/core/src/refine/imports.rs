use serde::Serialize;

use super::lint::{Diagnostic, DiagnosticKind};
use crate::context::CompletionPoint;
use crate::index::RepoIndex;

/// An import line to insert into the target module after line `after_line`
/// (0 = top of file).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportEdit {
    pub after_line: usize,
    pub text: String,
}

/// One edit per distinct suggested import; the fixed diagnostics are
/// removed from the returned list.
pub fn auto_import(
    _completion: &str,
    diagnostics: &[Diagnostic],
    point: &CompletionPoint,
    index: &RepoIndex,
) -> (Vec<ImportEdit>, Vec<Diagnostic>) {
    let after_line = index.module(&point.module).and_then(|m| m.last_import_line()).unwrap_or(0);
    let mut edits: Vec<ImportEdit> = Vec::new();
    let mut remaining = Vec::new();
    for d in diagnostics {
        match (&d.kind, &d.suggested_fix) {
            (DiagnosticKind::UnimportedUsage, Some(fix)) => {
                if !edits.iter().any(|e| &e.text == fix) {
                    edits.push(ImportEdit { after_line, text: fix.clone() });
                }
            }
            _ => remaining.push(d.clone()),
        }
    }
    (edits, remaining)
}

/// Insert the edits into `source`, keeping their order.
pub fn apply_import_edits(source: &str, edits: &[ImportEdit]) -> String {
    if edits.is_empty() {
        return source.to_string();
    }
    let mut lines: Vec<String> = source.split_inclusive('\n').map(str::to_string).collect();
    if let Some(last) = lines.last_mut() {
        if !last.ends_with('\n') {
            last.push('\n');
        }
    }
    for (shift, e) in edits.iter().enumerate() {
        let at = (e.after_line + shift).min(lines.len());
        lines.insert(at, format!("{}\n", e.text));
    }
    lines.concat()
}

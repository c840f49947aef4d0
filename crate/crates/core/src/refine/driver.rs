use serde::Serialize;
use thiserror::Error;

use super::imports::{apply_import_edits, auto_import, ImportEdit};
use super::lint::{lint_completion, Diagnostic};
use crate::context::CompletionPoint;
use crate::index::RepoIndex;
use crate::llm::{extract_code, BackendError, CompletionBackend};
use crate::prompt::{char_suffix, PromptPlan};

pub const DEFAULT_MAX_ITERS: usize = 2;

pub const PREVIOUS_HEADER: &str = "## Previous completion:\n";
pub const ISSUES_HEADER: &str = "## Linter found these issues:\n";
pub const RETRY_INSTRUCTION: &str = "## Return the corrected function body:\n";

#[derive(Debug, Error)]
#[error("refinement iteration {iteration}: {source}")]
pub struct RefineError {
    pub iteration: usize,
    #[source]
    pub source: BackendError,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iteration {
    pub completion: String,
    /// Diagnostics left after automatic import insertion.
    pub diagnostics: Vec<Diagnostic>,
    pub prompt: String,
    pub import_edits: Vec<ImportEdit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineTrace {
    pub iterations: Vec<Iteration>,
    #[serde(rename = "final")]
    pub final_completion: String,
    pub converged: bool,
}

impl RefineTrace {
    /// Index of the iteration chosen as final.
    pub fn best(&self) -> usize {
        best_index(&self.iterations)
    }
}

fn best_index(iterations: &[Iteration]) -> usize {
    let mut best = 0;
    for (i, it) in iterations.iter().enumerate() {
        if it.diagnostics.len() < iterations[best].diagnostics.len() {
            best = i;
        }
    }
    best
}

pub fn render_diagnostics(diagnostics: &[Diagnostic]) -> String {
    diagnostics.iter().map(|d| format!("{}\n", d.render())).collect()
}

/// The prompt for the next attempt: the previous prompt followed by the
/// completion and its issues. When that exceeds `max_chars` the initial
/// prompt is used as the base instead, and as a last resort the head of the
/// base is cut.
pub fn refine_prompt(
    previous: &str,
    initial: &str,
    completion: &str,
    diagnostics: &[Diagnostic],
    max_chars: Option<usize>,
) -> String {
    let mut tail = String::from("\n");
    tail.push_str(PREVIOUS_HEADER);
    tail.push_str(completion);
    if !completion.ends_with('\n') {
        tail.push('\n');
    }
    tail.push_str(ISSUES_HEADER);
    tail.push_str(&render_diagnostics(diagnostics));
    tail.push_str(RETRY_INSTRUCTION);
    let Some(max) = max_chars else {
        return format!("{previous}{tail}");
    };
    let tail_len = tail.chars().count();
    for base in [previous, initial] {
        if base.chars().count() + tail_len <= max {
            return format!("{base}{tail}");
        }
    }
    let room = max.saturating_sub(tail_len);
    format!("{}{tail}", char_suffix(initial, room))
}

fn attempt(completion: String, prompt: String, point: &CompletionPoint, index: &mut RepoIndex) -> Iteration {
    let diags = lint_completion(&completion, point, index);
    let (edits, remaining) = auto_import(&completion, &diags, point, index);
    if !edits.is_empty() {
        let source = index.source(&point.module).unwrap_or_default();
        let patched = apply_import_edits(source, &edits);
        if let Ok(next) = index.with_module_source(&point.module, &patched) {
            *index = next;
        }
    }
    Iteration { completion, diagnostics: remaining, prompt, import_edits: edits }
}

/// Complete, lint, and resend the diagnostics up to `max_iters` times.
/// Import edits accumulate in a private copy of the index.
pub fn refine_loop(
    point: &CompletionPoint,
    plan: &PromptPlan,
    backend: &dyn CompletionBackend,
    index: &RepoIndex,
    max_iters: usize,
    max_chars: Option<usize>,
) -> Result<RefineTrace, RefineError> {
    let mut work = index.clone();
    let mut iterations = Vec::new();
    let reply = backend.complete(&plan.realized).map_err(|source| RefineError { iteration: 0, source })?;
    iterations.push(attempt(extract_code(&reply), plan.realized.clone(), point, &mut work));
    while iterations.len() <= max_iters {
        let last: &Iteration = iterations.last().expect("nonempty");
        if last.diagnostics.is_empty() {
            break;
        }
        let prompt = refine_prompt(&last.prompt, &plan.realized, &last.completion, &last.diagnostics, max_chars);
        let n = iterations.len();
        let reply = backend.complete(&prompt).map_err(|source| RefineError { iteration: n, source })?;
        iterations.push(attempt(extract_code(&reply), prompt, point, &mut work));
    }
    let best = best_index(&iterations);
    Ok(RefineTrace {
        final_completion: iterations[best].completion.clone(),
        converged: iterations[best].diagnostics.is_empty(),
        iterations,
    })
}

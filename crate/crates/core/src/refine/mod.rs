//! Linting of generated bodies, import fixes and the resend loop.

mod driver;
mod imports;
mod lint;

pub use driver::{
    refine_loop, refine_prompt, render_diagnostics, Iteration, RefineError, RefineTrace, DEFAULT_MAX_ITERS,
    ISSUES_HEADER, PREVIOUS_HEADER, RETRY_INSTRUCTION,
};
pub use imports::{apply_import_edits, auto_import, ImportEdit};
pub use lint::{importable, lint_completion, normalize_body, splice_body, Diagnostic, DiagnosticKind, Span};

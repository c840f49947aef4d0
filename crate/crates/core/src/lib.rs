//! Repository-level Python code completion: a static index of the
//! repository, cross-file context for a target function, budgeted prompts,
//! lint-driven refinement, and evaluation metrics.

pub mod config;
pub mod context;
pub mod eval;
pub mod index;
pub mod llm;
pub mod prompt;
pub mod refine;
pub mod syntax;
pub mod synth;

pub use config::{Config, ConfigError};
pub use context::{identify_context, CompletionPoint, CrossFileContext, PointError};
pub use eval::{run_eval, EvalRun, EvalTask, MetricsReport};
pub use index::{build_repo_index, IndexError, RepoIndex};
pub use llm::{backend_from_config, BackendError, CompletionBackend};
pub use prompt::{build_prompt, Budget, PromptPlan, Strategy};
pub use refine::{lint_completion, refine_loop, Diagnostic, RefineTrace};

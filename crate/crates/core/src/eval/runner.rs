use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use super::dataset::EvalTask;
use super::metrics::{codebleu_parts, exact_match, CodeBleuWeights};
use crate::context::{identify_context, CompletionPoint, ContextOptions};
use crate::index::{build_repo_index, RepoIndex};
use crate::llm::{extract_code, CompletionBackend};
use crate::prompt::{build_prompt, Budget, RagOptions, Strategy};
use crate::refine::{normalize_body, refine_loop, splice_body, Iteration, DEFAULT_MAX_ITERS};

/// Body that replaces the target function while it is being completed.
const MASK: &str = "pass\n";

#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub budget: Budget,
    pub max_refine_iters: usize,
    pub context: ContextOptions,
    pub rag: RagOptions,
    pub weights: CodeBleuWeights,
    pub ignore: Vec<String>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            budget: Budget::default(),
            max_refine_iters: DEFAULT_MAX_ITERS,
            context: ContextOptions::default(),
            rag: RagOptions::default(),
            weights: CodeBleuWeights::default(),
            ignore: crate::index::DEFAULT_IGNORE.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TaskScores {
    pub em: f64,
    pub codebleu: f64,
    pub syntax_match: f64,
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub dataflow: f64,
}

/// One JSONL row of the per-task trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskTrace {
    pub task: usize,
    pub module: String,
    pub function: String,
    pub strategy: Strategy,
    pub prompt: Option<String>,
    pub iterations: Vec<Iteration>,
    pub completion: String,
    pub gold: String,
    pub scores: TaskScores,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub strategy: Strategy,
    pub n: usize,
    pub em: f64,
    pub codebleu: f64,
    pub syntax_match: f64,
    pub errors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRun {
    pub report: MetricsReport,
    pub traces: Vec<TaskTrace>,
}

impl EvalRun {
    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn trace_jsonl(&self) -> String {
        self.traces.iter().map(|t| serde_json::to_string(t).expect("trace serializes") + "\n").collect()
    }
}

pub fn score(pred: &str, gold: &str, weights: &CodeBleuWeights) -> TaskScores {
    let parts = codebleu_parts(pred, gold, weights);
    TaskScores {
        em: f64::from(exact_match(pred, gold)),
        codebleu: parts.combined,
        syntax_match: parts.syntax,
        ngram: parts.ngram,
        weighted_ngram: parts.weighted_ngram,
        dataflow: parts.dataflow,
    }
}

/// The index with the target body replaced by a placeholder, so nothing of
/// the gold leaks into context or retrieval.
pub fn masked_index(index: &RepoIndex, module: &str, function: &str) -> Result<(RepoIndex, CompletionPoint), String> {
    let point = CompletionPoint::new(index, module, function).map_err(|e| e.to_string())?;
    let decl = point.decl(index).ok_or("target function vanished")?;
    let source = index.source(module).unwrap_or_default();
    let masked = splice_body(source, decl, MASK);
    let next = index.with_module_source(module, &masked).map_err(|e| format!("masking failed: {e}"))?;
    let point = CompletionPoint::new(&next, module, function).map_err(|e| e.to_string())?;
    Ok((next, point))
}

struct Outcome {
    prompt: Option<String>,
    iterations: Vec<Iteration>,
    completion: String,
}

fn complete_task(
    index: &RepoIndex,
    task: &EvalTask,
    strategy: Strategy,
    backend: &dyn CompletionBackend,
    settings: &EvalSettings,
) -> Result<Outcome, (Option<String>, String)> {
    let (masked, point) = masked_index(index, &task.module, &task.function).map_err(|e| (None, e))?;
    let ctx = identify_context(&point, &masked, &settings.context).map_err(|e| (None, e.to_string()))?;
    let plan =
        build_prompt(&ctx, strategy, &settings.budget, &masked, &settings.rag).map_err(|e| (None, e.to_string()))?;
    let prompt = Some(plan.realized.clone());
    if strategy == Strategy::IdeCoder {
        let trace =
            refine_loop(&point, &plan, backend, &masked, settings.max_refine_iters, Some(settings.budget.max_chars))
                .map_err(|e| (prompt.clone(), e.to_string()))?;
        Ok(Outcome { prompt, completion: normalize_body(&trace.final_completion), iterations: trace.iterations })
    } else {
        let reply = backend.complete(&plan.realized).map_err(|e| (prompt.clone(), e.to_string()))?;
        Ok(Outcome { prompt, iterations: Vec::new(), completion: normalize_body(&extract_code(&reply)) })
    }
}

fn percent(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    100.0 * values.sum::<f64>() / n as f64
}

/// Run every task under `strategy`. Repositories are indexed once each;
/// tasks run in parallel and are reported in dataset order.
pub fn run_eval(
    tasks: &[EvalTask],
    strategy: Strategy,
    backend: &dyn CompletionBackend,
    settings: &EvalSettings,
) -> EvalRun {
    let repos: Vec<&PathBuf> =
        tasks.iter().map(|t| &t.repo).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let indexes: BTreeMap<&PathBuf, Result<RepoIndex, String>> =
        repos.par_iter().map(|r| (*r, build_repo_index(r, &settings.ignore).map_err(|e| e.to_string()))).collect();
    let traces: Vec<TaskTrace> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, task)| {
            let result = match &indexes[&task.repo] {
                Ok(index) => complete_task(index, task, strategy, backend, settings),
                Err(e) => Err((None, e.clone())),
            };
            let (prompt, iterations, completion, error) = match result {
                Ok(o) => (o.prompt, o.iterations, o.completion, None),
                Err((prompt, e)) => (prompt, Vec::new(), String::new(), Some(e)),
            };
            let scores = if error.is_some() {
                TaskScores::default()
            } else {
                score(&completion, &task.gold_body, &settings.weights)
            };
            TaskTrace {
                task: i,
                module: task.module.clone(),
                function: task.function.clone(),
                strategy,
                prompt,
                iterations,
                completion,
                gold: task.gold_body.clone(),
                scores,
                error,
            }
        })
        .collect();
    let n = traces.len();
    let report = MetricsReport {
        strategy,
        n,
        em: percent(traces.iter().map(|t| t.scores.em), n),
        codebleu: percent(traces.iter().map(|t| t.scores.codebleu), n),
        syntax_match: percent(traces.iter().map(|t| t.scores.syntax_match), n),
        errors: traces.iter().filter(|t| t.error.is_some()).count(),
    };
    EvalRun { report, traces }
}

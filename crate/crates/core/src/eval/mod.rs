//! Evaluation: metrics, retrieval for the RAG baseline, datasets, runner.

pub mod dataset;
pub mod metrics;
pub mod retrieve;
pub mod runner;

pub use dataset::{load_dataset, parse_dataset, Dataset, DatasetError, EvalTask, MAX_GOLD_LINES};
pub use metrics::{
    codebleu, codebleu_parts, dataflow_edges, dataflow_match, exact_match, metric_tokens, ngram_bleu, normalize_for_em,
    syntax_match, weighted_ngram_bleu, CodeBleuParts, CodeBleuWeights,
};
pub use retrieve::{retrieve_chunks, Chunk};
pub use runner::{masked_index, run_eval, score, EvalRun, EvalSettings, MetricsReport, TaskScores, TaskTrace};

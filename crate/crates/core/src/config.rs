//! JSON run configuration. Unknown keys are rejected at every level.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{ContextOptions, RelevanceWeights};
use crate::eval::{CodeBleuWeights, EvalSettings};
use crate::index::DEFAULT_IGNORE;
use crate::llm::BackendConfig;
use crate::prompt::{Budget, RagOptions};
use crate::refine::DEFAULT_MAX_ITERS;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub backend: BackendConfig,
    pub budget: Budget,
    pub max_refine_iters: usize,
    pub weights: RelevanceWeights,
    pub max_members: usize,
    pub rag: RagOptions,
    pub codebleu: CodeBleuWeights,
    pub ignore: Vec<String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            backend: BackendConfig::default(),
            budget: Budget::default(),
            max_refine_iters: DEFAULT_MAX_ITERS,
            weights: RelevanceWeights::default(),
            max_members: ContextOptions::default().max_members,
            rag: RagOptions::default(),
            codebleu: CodeBleuWeights::default(),
            ignore: DEFAULT_IGNORE.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config, ConfigError> {
        let config: Config = serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Read and validate a config file. A relative `backend.mock_script`
    /// is taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let mut config = Config::from_json(&text)?;
        if let (Some(script), Some(dir)) = (&config.backend.mock_script, path.parent()) {
            if Path::new(script).is_relative() {
                config.backend.mock_script = Some(dir.join(script).display().to_string());
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        Budget::new(self.budget.max_chars, self.budget.reserved_for_prefix).map_err(ConfigError::Invalid)?;
        self.backend.validate().map_err(ConfigError::Invalid)?;
        if self.rag.k == 0 || self.rag.chunk_lines == 0 {
            return bad("rag.k and rag.chunk_lines must be positive".into());
        }
        if self.max_members == 0 {
            return bad("max_members must be positive".into());
        }
        let w = &self.weights;
        if [w.referenced_in_target, w.user_defined, w.referenced_elsewhere].iter().any(|x| !x.is_finite() || *x < 0.0) {
            return bad("relevance weights must be finite and non-negative".into());
        }
        let c = &self.codebleu;
        let parts = [c.ngram, c.weighted_ngram, c.syntax, c.dataflow];
        if parts.iter().any(|x| !x.is_finite() || *x < 0.0) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("codebleu component weights must be non-negative and sum to 1".into());
        }
        if !(c.keyword_weight.is_finite() && c.keyword_weight > 0.0) {
            return bad("codebleu.keyword_weight must be positive".into());
        }
        Ok(())
    }

    pub fn context_options(&self) -> ContextOptions {
        ContextOptions { weights: self.weights, max_members: self.max_members }
    }

    pub fn eval_settings(&self) -> EvalSettings {
        EvalSettings {
            budget: self.budget,
            max_refine_iters: self.max_refine_iters,
            context: self.context_options(),
            rag: self.rag,
            weights: self.codebleu,
            ignore: self.ignore.clone(),
        }
    }
}

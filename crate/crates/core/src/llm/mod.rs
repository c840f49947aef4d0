//! Completion backends: a chat-completion HTTP client and a scripted mock.

mod http;
mod mock;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::HttpBackend;
pub use mock::{MockBackend, MockRule, MockScript};

pub const DEFAULT_API_KEY_ENV: &str = "CROSSFILE_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("authentication error: {0}")]
    Auth(String),
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Http,
    Mock,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BackendKind::Http => "http",
            BackendKind::Mock => "mock",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Environment variable holding the API key.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// Inline mock script (mock kind).
    #[serde(default)]
    pub mock: Option<MockScript>,
    /// Mock script file, used when `mock` is absent.
    #[serde(default)]
    pub mock_script: Option<String>,
}

fn default_timeout() -> u64 {
    60
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.to_string()
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            endpoint: None,
            model: None,
            temperature: 0.0,
            timeout_secs: default_timeout(),
            api_key_env: default_key_env(),
            mock: None,
            mock_script: None,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!("temperature must be a finite value >= 0, got {}", self.temperature));
        }
        if self.timeout_secs == 0 {
            return Err("timeout_secs must be positive".into());
        }
        if self.kind == BackendKind::Http {
            if self.endpoint.as_deref().is_none_or(str::is_empty) {
                return Err("http backend requires endpoint".into());
            }
            if self.model.as_deref().is_none_or(str::is_empty) {
                return Err("http backend requires model".into());
            }
        }
        Ok(())
    }
}

/// Build the configured backend. Mock scripts named by path are read here.
pub fn backend_from_config(config: &BackendConfig) -> Result<Box<dyn CompletionBackend>, String> {
    config.validate()?;
    match config.kind {
        BackendKind::Mock => {
            let script = match (&config.mock, &config.mock_script) {
                (Some(s), _) => s.clone(),
                (None, Some(path)) => MockScript::from_file(path.as_ref())?,
                (None, None) => MockScript::default(),
            };
            Ok(Box::new(MockBackend::new(script)))
        }
        BackendKind::Http => {
            let key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
            Ok(Box::new(HttpBackend::new(config, key).map_err(|e| e.to_string())?))
        }
    }
}

/// Text to use as a function body from a raw model reply: a fenced code
/// block is unwrapped, and outer blank lines are dropped.
pub fn extract_code(reply: &str) -> String {
    let reply = crate::syntax::normalize_newlines(reply);
    if let Some(start) = reply.find("```") {
        let after = &reply[start + 3..];
        let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
        let body = &after[body_start..];
        let end = body.find("```").unwrap_or(body.len());
        return trim_blank_lines(&body[..end]);
    }
    trim_blank_lines(&reply)
}

fn trim_blank_lines(text: &str) -> String {
    let lines: Vec<&str> = text.split('\n').collect();
    let first = lines.iter().position(|l| !l.trim().is_empty());
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    match (first, last) {
        (Some(a), Some(b)) => {
            let mut s = lines[a..=b].join("\n");
            s.push('\n');
            s
        }
        _ => String::new(),
    }
}

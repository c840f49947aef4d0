use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendError, CompletionBackend};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    pub require: Vec<String>,
    pub completion: String,
}

/// Ordered rules; the first whose required substrings all occur in the
/// prompt answers, otherwise `fallback`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    #[serde(default)]
    pub rules: Vec<MockRule>,
    #[serde(default = "default_fallback")]
    pub fallback: String,
}

fn default_fallback() -> String {
    "pass".to_string()
}

impl Default for MockScript {
    fn default() -> Self {
        MockScript { rules: Vec::new(), fallback: default_fallback() }
    }
}

impl MockScript {
    pub fn from_file(path: &Path) -> Result<MockScript, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read mock script {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid mock script {}: {e}", path.display()))
    }

    pub fn answer(&self, prompt: &str) -> &str {
        self.rules
            .iter()
            .find(|r| r.require.iter().all(|s| prompt.contains(s.as_str())))
            .map_or(self.fallback.as_str(), |r| r.completion.as_str())
    }
}

#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    script: MockScript,
}

impl MockBackend {
    pub fn new(script: MockScript) -> MockBackend {
        MockBackend { script }
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        Ok(self.script.answer(prompt).to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(req: &[&str], out: &str) -> MockRule {
        MockRule { require: req.iter().map(|s| s.to_string()).collect(), completion: out.to_string() }
    }

    #[test]
    fn first_matching_rule_wins() {
        let s = MockScript {
            rules: vec![rule(&["get_service_state"], "return svc.get_service_state()"), rule(&[], "never")],
            fallback: "pass".into(),
        };
        let b = MockBackend::new(s);
        assert_eq!(b.complete("... def get_service_state(self) -> str ...").unwrap(), "return svc.get_service_state()");
        assert_eq!(b.complete("nothing here").unwrap(), "never");
    }

    #[test]
    fn empty_rules_use_fallback() {
        let b = MockBackend::new(MockScript::default());
        assert_eq!(b.complete("anything").unwrap(), "pass");
    }

    #[test]
    fn json_form() {
        let s: MockScript =
            serde_json::from_str(r#"{"rules":[{"require":["a","b"],"completion":"x"}],"fallback":"pass"}"#).unwrap();
        assert_eq!(s.answer("a b"), "x");
        assert_eq!(s.answer("a"), "pass");
    }
}

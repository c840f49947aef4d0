use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde_json::{json, Value};

use super::{BackendConfig, BackendError, CompletionBackend};

/// Chat-completion client: one user message per request, reply read from
/// `choices[0].message.content`. Transport failures are retried once.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    endpoint: String,
    model: String,
    temperature: f64,
    api_key: Option<String>,
    client: Client,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig, api_key: Option<String>) -> Result<HttpBackend, BackendError> {
        let client = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            endpoint: config.endpoint.clone().unwrap_or_default(),
            model: config.model.clone().unwrap_or_default(),
            temperature: config.temperature,
            api_key,
            client,
        })
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        })
    }

    fn attempt(&self, body: &Value, key: &str) -> Result<String, BackendError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(key)
            .json(body)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        if status == StatusCode::UNAUTHORIZED || status == StatusCode::FORBIDDEN {
            return Err(BackendError::Auth(format!("server rejected the API key ({status})")));
        }
        if status.is_server_error() {
            return Err(BackendError::Transport(format!("server error {status}")));
        }
        if !status.is_success() {
            return Err(BackendError::Protocol(format!("unexpected status {status}")));
        }
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| BackendError::Protocol(format!("invalid JSON: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("missing choices[0].message.content".into()))
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let Some(key) = self.api_key.as_deref() else {
            return Err(BackendError::Auth("no API key configured".into()));
        };
        let body = self.request_body(prompt);
        match self.attempt(&body, key) {
            Err(BackendError::Transport(_)) => self.attempt(&body, key),
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;
    use std::thread;

    use super::*;
    use crate::llm::BackendKind;

    /// Serve the given (status, body) replies in order; each captured
    /// request body is sent back through the channel.
    fn stub(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for (status, body) in replies {
                let Ok((mut stream, _)) = listener.accept() else { return };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                    if line == "\r\n" {
                        break;
                    }
                }
                let mut buf = vec![0u8; len];
                reader.read_exact(&mut buf).unwrap();
                tx.send(String::from_utf8(buf).unwrap()).ok();
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        (format!("http://{addr}/v1/chat/completions"), rx)
    }

    fn config(endpoint: &str, temperature: f64) -> BackendConfig {
        BackendConfig {
            kind: BackendKind::Http,
            endpoint: Some(endpoint.to_string()),
            model: Some("test-model".into()),
            temperature,
            timeout_secs: 5,
            ..Default::default()
        }
    }

    fn ok_body(content: &str) -> String {
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
    }

    #[test]
    fn request_shape_and_reply() {
        let (url, rx) = stub(vec![(200, ok_body("return 1"))]);
        let b = HttpBackend::new(&config(&url, 0.0), Some("k".into())).unwrap();
        assert_eq!(b.complete("PROMPT").unwrap(), "return 1");
        let sent: Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
        assert_eq!(sent["model"], "test-model");
        assert_eq!(sent["messages"][0]["role"], "user");
        assert_eq!(sent["messages"][0]["content"], "PROMPT");
        assert_eq!(sent["temperature"].as_f64(), Some(0.0));
    }

    #[test]
    fn temperature_passed_exactly() {
        let (url, rx) = stub(vec![(200, ok_body("x"))]);
        let b = HttpBackend::new(&config(&url, 0.35), Some("k".into())).unwrap();
        b.complete("p").unwrap();
        let raw = rx.recv().unwrap();
        assert!(raw.contains("\"temperature\":0.35"), "{raw}");
    }

    #[test]
    fn auth_and_protocol_errors() {
        let (url, _rx) = stub(vec![(401, "{}".into()), (200, "{\"choices\":[]}".into()), (404, "{}".into())]);
        let b = HttpBackend::new(&config(&url, 0.0), Some("k".into())).unwrap();
        assert!(matches!(b.complete("p"), Err(BackendError::Auth(_))));
        assert!(matches!(b.complete("p"), Err(BackendError::Protocol(_))));
        assert!(matches!(b.complete("p"), Err(BackendError::Protocol(_))));
        let nokey = HttpBackend::new(&config(&url, 0.0), None).unwrap();
        assert!(matches!(nokey.complete("p"), Err(BackendError::Auth(_))));
    }

    #[test]
    fn server_error_retried_once() {
        let (url, rx) = stub(vec![(503, "{}".into()), (200, ok_body("second"))]);
        let b = HttpBackend::new(&config(&url, 0.0), Some("k".into())).unwrap();
        assert_eq!(b.complete("p").unwrap(), "second");
        assert_eq!(rx.iter().take(2).count(), 2);
    }

    #[test]
    fn unreachable_is_transport() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let b = HttpBackend::new(&config(&format!("http://{addr}/"), 0.0), Some("k".into())).unwrap();
        assert!(matches!(b.complete("p"), Err(BackendError::Transport(_))));
    }
}

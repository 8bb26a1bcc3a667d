//! Chat-completions responder over blocking HTTP.
//!
//! Each sample is a separate request carrying the model name, a single user
//! message, the temperature and, when configured, `seed + sample_index`.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::responder::{Responder, ResponderError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    /// Extra attempts after the first failure.
    pub retries: u32,
    pub backoff_ms: u64,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub seed: Option<u64>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "default".into(),
            temperature: 1.0,
            timeout_secs: 60,
            retries: 3,
            backoff_ms: 500,
            api_key_env: "UNLEARNKIT_API_KEY".into(),
            seed: None,
        }
    }
}

pub struct HttpResponder {
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpResponder {
    pub fn new(config: HttpConfig) -> Self {
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            config,
            api_key,
            agent,
        }
    }

    pub fn with_api_key(mut self, key: impl Into<String>) -> Self {
        self.api_key = Some(key.into());
        self
    }

    fn request_body(&self, prompt: &str, sample_index: u32) -> Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        });
        if let Some(seed) = self.config.seed {
            body["seed"] = json!(seed.wrapping_add(sample_index as u64));
        }
        body
    }

    fn attempt(&self, body: &Value) -> Result<String, ResponderError> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| ResponderError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(ResponderError::Status { status, body });
        }
        let payload: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| ResponderError::Payload(e.to_string()))?;
        completion_text(&payload)
    }
}

/// Pulls `choices[0].message.content` out of a chat-completions payload.
pub fn completion_text(payload: &Value) -> Result<String, ResponderError> {
    payload
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ResponderError::Payload("missing choices[0].message.content".into()))
}

fn retryable(e: &ResponderError) -> bool {
    match e {
        ResponderError::Transport(_) => true,
        ResponderError::Status { status, .. } => *status == 429 || *status >= 500,
        _ => false,
    }
}

impl Responder for HttpResponder {
    fn complete(&self, prompt: &str, sample_index: u32) -> Result<String, ResponderError> {
        let body = self.request_body(prompt, sample_index);
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        loop {
            match self.attempt(&body) {
                Err(e) if retryable(&e) && attempt < self.config.retries => {
                    log::warn!("completion attempt {} failed: {e}; retrying", attempt + 1);
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

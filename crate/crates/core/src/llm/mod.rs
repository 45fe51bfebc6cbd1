//! Chat-completion backends shared by the retrieval and composer roles.

mod http;
mod mock;

use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

pub use http::{request_body, HttpBackend, API_KEY_ENV};
pub use mock::{MockBackend, MockExchange, MockRule, MockStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Checks that a request starts with exactly one system message and that no
/// user or assistant message is blank.
pub fn check_messages(messages: &[ChatMessage]) -> Result<(), LlmError> {
    match messages.first() {
        Some(m) if m.role == Role::System => {}
        _ => return Err(LlmError::InvalidRequest("first message must be the system message".into())),
    }
    for (i, m) in messages.iter().enumerate().skip(1) {
        if m.role == Role::System {
            return Err(LlmError::InvalidRequest(format!("message {i} is a second system message")));
        }
        if m.content.trim().is_empty() {
            return Err(LlmError::InvalidRequest(format!("message {i} is empty")));
        }
    }
    Ok(())
}

/// One model profile. Durations are written in milliseconds in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(rename = "timeout_ms", with = "millis", default = "default_timeout")]
    pub timeout: Duration,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each later one.
    #[serde(rename = "retry_base_delay_ms", with = "millis", default = "default_retry_delay")]
    pub retry_base_delay: Duration,
}

fn default_max_tokens() -> u32 {
    1024
}

fn default_timeout() -> Duration {
    Duration::from_secs(60)
}

fn default_max_retries() -> u32 {
    3
}

fn default_retry_delay() -> Duration {
    Duration::from_millis(500)
}

impl ModelConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            temperature: 0.0,
            max_tokens: default_max_tokens(),
            timeout: default_timeout(),
            max_retries: default_max_retries(),
            retry_base_delay: default_retry_delay(),
        }
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(format!("temperature must be a finite number >= 0, got {}", self.temperature));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".into());
        }
        if self.timeout.is_zero() {
            return Err("timeout_ms must be positive".into());
        }
        Ok(())
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {excerpt}")]
    Api { status: u16, excerpt: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("mock script exhausted")]
    ScriptExhausted,
    #[error("no mock rule matches the request")]
    NoMatchingRule,
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Timeout | LlmError::Transport(_) => true,
            LlmError::Api { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    /// Sends the conversation and returns the assistant's reply.
    async fn complete(&self, messages: &[ChatMessage], cfg: &ModelConfig) -> Result<ChatMessage, LlmError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn message_checks() {
        let ok = [ChatMessage::system("s"), ChatMessage::user("u")];
        assert!(check_messages(&ok).is_ok());
        assert!(check_messages(&[ChatMessage::user("u")]).is_err());
        assert!(check_messages(&[]).is_err());
        assert!(check_messages(&[ChatMessage::system("s"), ChatMessage::user("  ")]).is_err());
        assert!(check_messages(&[ChatMessage::system("s"), ChatMessage::system("t")]).is_err());
    }

    #[test]
    fn retry_classes() {
        assert!(LlmError::Timeout.is_retryable());
        assert!(LlmError::Api { status: 503, excerpt: String::new() }.is_retryable());
        assert!(LlmError::Api { status: 429, excerpt: String::new() }.is_retryable());
        assert!(!LlmError::Api { status: 401, excerpt: String::new() }.is_retryable());
        assert!(!LlmError::Api { status: 400, excerpt: String::new() }.is_retryable());
        assert!(!LlmError::MalformedResponse(String::new()).is_retryable());
    }

    #[test]
    fn config_from_toml() {
        let cfg: ModelConfig = toml::from_str(
            "endpoint = \"http://localhost:1/v1\"\nmodel = \"m\"\ntimeout_ms = 2500\nmax_retries = 1\n",
        )
        .unwrap();
        assert_eq!(cfg.timeout, Duration::from_millis(2500));
        assert_eq!(cfg.max_retries, 1);
        assert_eq!(cfg.temperature, 0.0);
        assert!(cfg.check().is_ok());
        assert!(cfg.clone().with_temperature(-1.0).check().is_err());
        assert!(toml::from_str::<ModelConfig>("endpoint = \"x\"\nmodel = \"m\"\napi_key = \"k\"").is_err());
    }
}

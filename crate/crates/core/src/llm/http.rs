use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use reqwest::header::{AUTHORIZATION, CONTENT_TYPE};
use serde::Serialize;
use serde_json::Value;
use tokio::sync::Semaphore;

use super::{check_messages, ChatBackend, ChatMessage, LlmError, ModelConfig};

/// Environment variable holding the bearer token. Keys are never read from
/// config files.
pub const API_KEY_ENV: &str = "LLM_API_KEY";

const EXCERPT_CHARS: usize = 200;
const MAX_BACKOFF: Duration = Duration::from_secs(30);

#[derive(Serialize)]
struct RequestBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

/// The exact bytes POSTed for a request.
pub fn request_body(messages: &[ChatMessage], cfg: &ModelConfig) -> Vec<u8> {
    serde_json::to_vec(&RequestBody {
        model: &cfg.model,
        messages,
        temperature: cfg.temperature,
        max_tokens: cfg.max_tokens,
    })
    .expect("request body serializes")
}

/// Client for `POST {endpoint}/chat/completions`.
#[derive(Clone)]
pub struct HttpBackend {
    client: reqwest::Client,
    api_key: Option<String>,
    permits: Arc<Semaphore>,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("api_key", &self.api_key.as_ref().map(|_| "<set>"))
            .field("available_permits", &self.permits.available_permits())
            .finish()
    }
}

impl HttpBackend {
    /// At most `concurrency` requests are in flight at once (minimum 1).
    pub fn new(api_key: Option<String>, concurrency: usize) -> Self {
        Self {
            client: reqwest::Client::new(),
            api_key: api_key.filter(|k| !k.is_empty()),
            permits: Arc::new(Semaphore::new(concurrency.max(1))),
        }
    }

    pub fn from_env(concurrency: usize) -> Self {
        Self::new(std::env::var(API_KEY_ENV).ok(), concurrency)
    }

    async fn attempt(&self, url: &str, body: &[u8], cfg: &ModelConfig) -> Result<ChatMessage, LlmError> {
        let mut req = self
            .client
            .post(url)
            .timeout(cfg.timeout)
            .header(CONTENT_TYPE, "application/json")
            .body(body.to_vec());
        if let Some(key) = &self.api_key {
            req = req.header(AUTHORIZATION, format!("Bearer {key}"));
        }
        let resp = req.send().await.map_err(classify)?;
        let status = resp.status();
        let bytes = resp.bytes().await.map_err(classify)?;
        if !status.is_success() {
            return Err(LlmError::Api {
                status: status.as_u16(),
                excerpt: excerpt(&String::from_utf8_lossy(&bytes)),
            });
        }
        let json: Value = serde_json::from_slice(&bytes)
            .map_err(|e| LlmError::MalformedResponse(format!("reply is not JSON: {e}")))?;
        let content = json
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| LlmError::MalformedResponse("reply lacks choices[0].message.content".into()))?;
        Ok(ChatMessage::assistant(content))
    }
}

fn classify(e: reqwest::Error) -> LlmError {
    if e.is_timeout() {
        LlmError::Timeout
    } else {
        // Drop the URL so nothing request-specific ends up in logs.
        LlmError::Transport(e.without_url().to_string())
    }
}

fn excerpt(body: &str) -> String {
    let mut s: String = body.chars().take(EXCERPT_CHARS).collect();
    if body.chars().count() > EXCERPT_CHARS {
        s.push('…');
    }
    s
}

fn backoff(base: Duration, retry: u32) -> Duration {
    base.saturating_mul(1u32.checked_shl(retry).unwrap_or(u32::MAX)).min(MAX_BACKOFF)
}

#[async_trait]
impl ChatBackend for HttpBackend {
    async fn complete(&self, messages: &[ChatMessage], cfg: &ModelConfig) -> Result<ChatMessage, LlmError> {
        check_messages(messages)?;
        let url = format!("{}/chat/completions", cfg.endpoint.trim_end_matches('/'));
        let body = request_body(messages, cfg);
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        let mut retry = 0;
        loop {
            match self.attempt(&url, &body, cfg).await {
                Err(e) if e.is_retryable() && retry < cfg.max_retries => {
                    tracing::warn!(error = %e, retry = retry + 1, "llm request failed; retrying");
                    tokio::time::sleep(backoff(cfg.retry_base_delay, retry)).await;
                    retry += 1;
                }
                other => return other,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn body_field_order() {
        let cfg = ModelConfig::new("http://x", "small").with_temperature(0.5);
        let body = request_body(&[ChatMessage::system("s"), ChatMessage::user("hi")], &cfg);
        assert_eq!(
            String::from_utf8(body).unwrap(),
            r#"{"model":"small","messages":[{"role":"system","content":"s"},{"role":"user","content":"hi"}],"temperature":0.5,"max_tokens":1024}"#
        );
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let base = Duration::from_millis(100);
        assert_eq!(backoff(base, 0), Duration::from_millis(100));
        assert_eq!(backoff(base, 3), Duration::from_millis(800));
        assert_eq!(backoff(base, 40), MAX_BACKOFF);
    }

    #[test]
    fn debug_hides_key() {
        let b = HttpBackend::new(Some("sk-secret".into()), 2);
        assert!(!format!("{b:?}").contains("sk-secret"));
    }
}

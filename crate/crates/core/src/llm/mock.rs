use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use async_trait::async_trait;

use super::{check_messages, ChatBackend, ChatMessage, LlmError, ModelConfig, Role};

/// One scripted outcome, optionally after a delay.
#[derive(Debug, Clone, PartialEq)]
pub struct MockStep {
    pub outcome: Result<String, LlmError>,
    pub delay: Duration,
}

impl MockStep {
    pub fn reply(text: impl Into<String>) -> Self {
        Self {
            outcome: Ok(text.into()),
            delay: Duration::ZERO,
        }
    }

    pub fn fail(err: LlmError) -> Self {
        Self {
            outcome: Err(err),
            delay: Duration::ZERO,
        }
    }

    pub fn after(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }
}

/// Replies with `reply` when the last user message contains `contains`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MockRule {
    pub contains: String,
    pub reply: String,
}

#[derive(Debug, Clone)]
enum Script {
    Sequence(VecDeque<MockStep>),
    Rules(Vec<MockRule>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockExchange {
    pub request: Vec<ChatMessage>,
    pub reply: Result<String, LlmError>,
}

/// Deterministic backend for tests and offline runs. Either consumes a
/// sequence of steps in order or answers from a rule table (first match
/// wins, an empty `contains` matches everything). Every call is logged.
#[derive(Debug)]
pub struct MockBackend {
    script: Mutex<Script>,
    delay: Duration,
    log: Mutex<Vec<MockExchange>>,
}

impl MockBackend {
    pub fn replies<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::steps(replies.into_iter().map(MockStep::reply))
    }

    pub fn steps(steps: impl IntoIterator<Item = MockStep>) -> Self {
        Self::with_script(Script::Sequence(steps.into_iter().collect()))
    }

    pub fn rules(rules: impl IntoIterator<Item = MockRule>) -> Self {
        Self::with_script(Script::Rules(rules.into_iter().collect()))
    }

    fn with_script(script: Script) -> Self {
        Self {
            script: Mutex::new(script),
            delay: Duration::ZERO,
            log: Mutex::new(Vec::new()),
        }
    }

    /// Adds a delay to every call.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn log(&self) -> Vec<MockExchange> {
        self.log.lock().unwrap().clone()
    }

    pub fn calls(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    /// Steps not yet consumed; `None` for rule tables.
    pub fn remaining(&self) -> Option<usize> {
        match &*self.script.lock().unwrap() {
            Script::Sequence(s) => Some(s.len()),
            Script::Rules(_) => None,
        }
    }

    fn next(&self, messages: &[ChatMessage]) -> MockStep {
        match &mut *self.script.lock().unwrap() {
            Script::Sequence(steps) => steps
                .pop_front()
                .unwrap_or_else(|| MockStep::fail(LlmError::ScriptExhausted)),
            Script::Rules(rules) => {
                let request = messages
                    .iter()
                    .rev()
                    .find(|m| m.role == Role::User)
                    .map(|m| m.content.as_str())
                    .unwrap_or("");
                rules
                    .iter()
                    .find(|r| request.contains(&r.contains))
                    .map(|r| MockStep::reply(r.reply.clone()))
                    .unwrap_or_else(|| MockStep::fail(LlmError::NoMatchingRule))
            }
        }
    }
}

#[async_trait]
impl ChatBackend for MockBackend {
    async fn complete(&self, messages: &[ChatMessage], _cfg: &ModelConfig) -> Result<ChatMessage, LlmError> {
        check_messages(messages)?;
        let step = self.next(messages);
        let wait = self.delay + step.delay;
        if !wait.is_zero() {
            tokio::time::sleep(wait).await;
        }
        self.log.lock().unwrap().push(MockExchange {
            request: messages.to_vec(),
            reply: step.outcome.clone(),
        });
        step.outcome.map(ChatMessage::assistant)
    }
}

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::abc::{Tune, ValidationIssue};
use crate::corpus::TagSet;
use crate::llm::{ChatMessage, Role};
use crate::retrieval::RankedCandidate;

use super::{DialogueConfig, DialogueError};

/// Everything one request produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnResult {
    pub user_request: String,
    pub extracted_tags: TagSet,
    /// The retrieval model's reply, kept for audit.
    pub tag_reply: String,
    /// Reply tokens outside the corpus vocabulary.
    pub dropped_tags: Vec<String>,
    pub retrieved: Vec<RankedCandidate>,
    pub commentary: String,
    /// The tune block found in the composer's reply.
    pub abc: Option<String>,
    #[serde(skip)]
    pub tune: Option<Tune>,
    pub raw_composer_output: String,
    pub validation: Vec<ValidationIssue>,
    pub duplicate_of: Option<String>,
    /// Set when the first reply had no tune and the composer was asked again.
    pub reprompted: bool,
}

/// Settings a session was created with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSettings {
    pub k: usize,
    pub retrieval_model: String,
    pub composer_model: String,
    pub max_turns: usize,
}

/// One conversation with the composer.
#[derive(Debug, Clone, Serialize)]
pub struct Session {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub settings: SessionSettings,
    pub transcript: Vec<ChatMessage>,
    pub turns: Vec<TurnResult>,
    #[serde(skip)]
    pub(super) config: Arc<DialogueConfig>,
}

impl Session {
    pub(super) fn new(config: Arc<DialogueConfig>) -> Self {
        Self {
            id: uuid::Uuid::new_v4().to_string(),
            created_at: Utc::now(),
            settings: SessionSettings {
                k: config.retrieval.k,
                retrieval_model: config.retrieval_model.model.clone(),
                composer_model: config.composer_model.model.clone(),
                max_turns: config.max_turns,
            },
            transcript: vec![config.templates.system_message()],
            turns: Vec::new(),
            config,
        }
    }

    /// One system message first, then strictly alternating user and
    /// assistant messages ending with an assistant reply.
    pub fn check_alternation(&self) -> Result<(), String> {
        let t = &self.transcript;
        if t.first().map(|m| m.role) != Some(Role::System) {
            return Err("transcript does not start with the system message".into());
        }
        for (i, m) in t.iter().enumerate().skip(1) {
            let expected = if i % 2 == 1 { Role::User } else { Role::Assistant };
            if m.role != expected {
                return Err(format!("message {i} is {:?}, expected {expected:?}", m.role));
            }
        }
        if t.len().is_multiple_of(2) {
            return Err("transcript ends with an unanswered user message".into());
        }
        Ok(())
    }

    /// Pretty JSON of the whole session, for audit.
    pub fn export_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("session serializes")
    }
}

/// Shared handle allowing one turn at a time.
#[derive(Debug)]
pub struct SessionHandle {
    session: Mutex<Session>,
    in_flight: AtomicBool,
}

/// Clears the in-flight flag when dropped, including on cancellation.
pub(super) struct TurnGuard<'a>(&'a AtomicBool);

impl Drop for TurnGuard<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

impl SessionHandle {
    pub(super) fn new(session: Session) -> Self {
        Self {
            session: Mutex::new(session),
            in_flight: AtomicBool::new(false),
        }
    }

    pub fn id(&self) -> String {
        self.lock().id.clone()
    }

    pub fn snapshot(&self) -> Session {
        self.lock().clone()
    }

    pub fn is_busy(&self) -> bool {
        self.in_flight.load(Ordering::Acquire)
    }

    pub(super) fn lock(&self) -> MutexGuard<'_, Session> {
        self.session.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub(super) fn begin_turn(&self) -> Result<TurnGuard<'_>, DialogueError> {
        self.in_flight
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .map(|_| TurnGuard(&self.in_flight))
            .map_err(|_| DialogueError::TurnInFlight)
    }
}

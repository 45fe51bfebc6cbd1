//! The conversation loop: for every request, tag it, retrieve examples,
//! prompt the composer with the whole conversation so far, then split,
//! validate and copy-check its answer.

mod output;
mod prompt;
mod session;

use std::sync::Arc;
use std::time::Instant;

use crate::abc::validate;
use crate::corpus::{CorpusIndex, TagSet};
use crate::llm::{ChatBackend, ChatMessage, LlmError, ModelConfig};
use crate::retrieval::{extract_tags, rank, RetrievalConfig, RetrievalError, TagExtraction};

pub use output::{parse_composer_output, ComposerOutput};
pub use prompt::{Templates, OUTPUT_FORMAT, REPROMPT};
pub use session::{Session, SessionHandle, SessionSettings, TurnResult};

pub const DEFAULT_MAX_TURNS: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum DialogueError {
    #[error("missing or invalid template: {0}")]
    MissingTemplate(String),
    #[error("a turn is already in progress for this session")]
    TurnInFlight,
    #[error("session reached its limit of {0} turns")]
    TooManyTurns(usize),
    #[error("request text is empty")]
    EmptyRequest,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage} model failed: {source}")]
    Llm {
        stage: &'static str,
        #[source]
        source: LlmError,
    },
}

#[derive(Debug, Clone)]
pub struct DialogueConfig {
    pub retrieval: RetrievalConfig,
    pub retrieval_model: ModelConfig,
    pub composer_model: ModelConfig,
    pub templates: Templates,
    pub max_turns: usize,
}

impl DialogueConfig {
    pub fn new(retrieval_model: ModelConfig, composer_model: ModelConfig) -> Self {
        Self {
            retrieval: RetrievalConfig::default(),
            retrieval_model,
            composer_model,
            templates: Templates::default(),
            max_turns: DEFAULT_MAX_TURNS,
        }
    }

    pub fn check(&self) -> Result<(), DialogueError> {
        self.retrieval.check().map_err(DialogueError::Config)?;
        self.retrieval_model
            .check()
            .map_err(|e| DialogueError::Config(format!("retrieval_model: {e}")))?;
        self.composer_model
            .check()
            .map_err(|e| DialogueError::Config(format!("composer_model: {e}")))?;
        if self.max_turns == 0 {
            return Err(DialogueError::Config("max_turns must be positive".into()));
        }
        Ok(())
    }
}

/// Wires the corpus and the two model backends together.
#[derive(Clone)]
pub struct DialogueEngine {
    index: Arc<CorpusIndex>,
    retrieval_backend: Arc<dyn ChatBackend>,
    composer_backend: Arc<dyn ChatBackend>,
    config: Arc<DialogueConfig>,
}

impl DialogueEngine {
    pub fn new(
        index: Arc<CorpusIndex>,
        retrieval_backend: Arc<dyn ChatBackend>,
        composer_backend: Arc<dyn ChatBackend>,
        config: DialogueConfig,
    ) -> Result<Self, DialogueError> {
        config.check()?;
        Ok(Self {
            index,
            retrieval_backend,
            composer_backend,
            config: Arc::new(config),
        })
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }

    pub fn config(&self) -> &DialogueConfig {
        &self.config
    }

    pub fn retrieval_backend(&self) -> &dyn ChatBackend {
        self.retrieval_backend.as_ref()
    }

    /// A fresh session holding only the composer system prompt.
    pub fn new_session(&self) -> SessionHandle {
        SessionHandle::new(Session::new(self.config.clone()))
    }

    /// Runs one turn. Nothing is committed to the session unless every model
    /// call succeeds; a second call while a turn is running is rejected.
    pub async fn handle_request(&self, handle: &SessionHandle, text: &str) -> Result<TurnResult, DialogueError> {
        let _guard = handle.begin_turn()?;
        if text.trim().is_empty() {
            return Err(DialogueError::EmptyRequest);
        }
        let (session_id, mut transcript, config) = {
            let s = handle.lock();
            if s.turns.len() >= s.config.max_turns {
                return Err(DialogueError::TooManyTurns(s.config.max_turns));
            }
            (s.id.clone(), s.transcript.clone(), s.config.clone())
        };
        let started = Instant::now();

        let extraction = self.extract(text, &config).await?;
        let retrieved = rank(&extraction.tags, &self.index, &config.retrieval);
        let examples: Vec<_> = retrieved.iter().filter_map(|c| self.index.get(&c.entry_id)).collect();
        transcript.push(config.templates.build_prompt(&examples, text));

        let mut raw = self.compose(&transcript, &config).await?;
        transcript.push(ChatMessage::assistant(raw.clone()));
        let mut parsed = parse_composer_output(&raw);
        let mut reprompted = false;
        if parsed.tune.is_none() {
            reprompted = true;
            transcript.push(ChatMessage::user(REPROMPT));
            raw = self.compose(&transcript, &config).await?;
            transcript.push(ChatMessage::assistant(raw.clone()));
            parsed = parse_composer_output(&raw);
        }

        let validation = parsed.tune.as_ref().map(validate).unwrap_or_default();
        let duplicate_of = parsed
            .tune
            .as_ref()
            .and_then(|t| self.index.contains_duplicate(t))
            .map(String::from);
        let result = TurnResult {
            user_request: text.to_string(),
            extracted_tags: extraction.tags,
            tag_reply: extraction.raw,
            dropped_tags: extraction.dropped,
            retrieved,
            commentary: parsed.commentary,
            abc: parsed.abc,
            tune: parsed.tune,
            raw_composer_output: raw,
            validation,
            duplicate_of,
            reprompted,
        };

        {
            let mut s = handle.lock();
            s.transcript = transcript;
            s.turns.push(result.clone());
        }
        tracing::info!(
            session = %session_id,
            tags = %result.extracted_tags,
            retrieved = ?result.retrieved.iter().map(|c| c.entry_id.as_str()).collect::<Vec<_>>(),
            tune = result.tune.is_some(),
            reprompted,
            duplicate_of = ?result.duplicate_of,
            latency_ms = started.elapsed().as_millis() as u64,
            "turn complete"
        );
        Ok(result)
    }

    async fn extract(&self, text: &str, config: &DialogueConfig) -> Result<TagExtraction, DialogueError> {
        let vocabulary = self.index.vocabulary();
        if vocabulary.is_empty() {
            // Nothing to retrieve; go zero-shot without asking.
            return Ok(TagExtraction {
                tags: TagSet::new(),
                raw: String::new(),
                dropped: Vec::new(),
            });
        }
        extract_tags(
            text,
            vocabulary,
            self.retrieval_backend.as_ref(),
            &config.retrieval_model,
            &config.templates.retrieval,
        )
        .await
        .map_err(|e| match e {
            RetrievalError::Llm(source) => DialogueError::Llm {
                stage: "retrieval",
                source,
            },
            other => DialogueError::MissingTemplate(other.to_string()),
        })
    }

    async fn compose(&self, transcript: &[ChatMessage], config: &DialogueConfig) -> Result<String, DialogueError> {
        self.composer_backend
            .complete(transcript, &config.composer_model)
            .await
            .map(|m| m.content)
            .map_err(|source| DialogueError::Llm {
                stage: "composer",
                source,
            })
    }
}

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::abc::{parse_tune, validate, ValidationIssue};
use crate::corpus::{TagFamily, TagSet};
use crate::dialogue::{DialogueEngine, DialogueError, Session, SessionHandle, SessionSettings, TurnResult};
use crate::llm::{ChatMessage, LlmError};
use crate::rational::{decimal_text, ratio_text};
use crate::retrieval::{extract_tags, rank, RankedCandidate, RetrievalConfig, RetrievalError};

const SIMILARITY_PLACES: usize = 12;

pub struct AppState {
    pub engine: DialogueEngine,
    sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    max_sessions: usize,
    request_timeout: Duration,
}

impl AppState {
    pub fn new(engine: DialogueEngine, max_sessions: usize, request_timeout: Duration) -> Self {
        Self {
            engine,
            sessions: RwLock::new(HashMap::new()),
            max_sessions,
            request_timeout,
        }
    }

    fn session(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session {id:?}")))
    }

    /// Every session, oldest first.
    pub fn sessions(&self) -> Vec<Session> {
        let mut all: Vec<Session> = self.sessions.read().unwrap().values().map(|h| h.snapshot()).collect();
        all.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        all
    }
}

/// The `{code, message}` error body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
            },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Upstream failures are reported by kind only; bodies and URLs stay in the
/// server log.
fn upstream(stage: &str, e: &LlmError) -> ApiError {
    tracing::warn!(stage, error = %e, "upstream model failure");
    let what = match e {
        LlmError::Timeout => "timed out".to_string(),
        LlmError::Transport(_) => "could not be reached".to_string(),
        LlmError::Api { status, .. } => format!("returned HTTP {status}"),
        LlmError::MalformedResponse(_) => "sent a malformed reply".to_string(),
        LlmError::InvalidRequest(_) => "rejected the request".to_string(),
        LlmError::ScriptExhausted | LlmError::NoMatchingRule => "mock script has no reply".to_string(),
    };
    ApiError::new(StatusCode::BAD_GATEWAY, "upstream_error", format!("the {stage} model {what}"))
}

impl From<DialogueError> for ApiError {
    fn from(e: DialogueError) -> Self {
        match &e {
            DialogueError::TurnInFlight => ApiError::new(StatusCode::CONFLICT, "turn_in_flight", e.to_string()),
            DialogueError::TooManyTurns(_) => ApiError::new(StatusCode::CONFLICT, "too_many_turns", e.to_string()),
            DialogueError::EmptyRequest => ApiError::bad_request(e.to_string()),
            DialogueError::Llm { stage, source } => upstream(stage, source),
            DialogueError::MissingTemplate(_) | DialogueError::Config(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            }
        }
    }
}

/// JSON body extractor whose rejections use the error envelope.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(rejection) => Err(rejection_error(rejection)),
        }
    }
}

fn rejection_error(r: JsonRejection) -> ApiError {
    let status = match &r {
        JsonRejection::MissingJsonContentType(_) => StatusCode::UNSUPPORTED_MEDIA_TYPE,
        _ => StatusCode::BAD_REQUEST,
    };
    ApiError::new(status, "bad_request", r.body_text())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateView {
    pub id: String,
    pub title: String,
    pub tags: TagSet,
    /// Decimal form of the exact similarity, e.g. `"0.25"`.
    pub similarity: String,
    /// The exact similarity as a fraction, e.g. `"1/4"`.
    pub similarity_exact: String,
    pub matched_tags: TagSet,
}

impl CandidateView {
    fn new(c: &RankedCandidate, engine: &DialogueEngine) -> Self {
        let entry = engine.index().get(&c.entry_id);
        Self {
            id: c.entry_id.clone(),
            title: entry.map(|e| e.title.clone()).unwrap_or_default(),
            tags: entry.map(|e| e.tags.clone()).unwrap_or_default(),
            similarity: decimal_text(&c.similarity, SIMILARITY_PLACES),
            similarity_exact: ratio_text(&c.similarity),
            matched_tags: c.matched_tags.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnView {
    pub user_request: String,
    pub extracted_tags: TagSet,
    pub retrieved: Vec<CandidateView>,
    pub commentary: String,
    pub abc: Option<String>,
    pub tune_found: bool,
    pub validation: Vec<ValidationIssue>,
    pub duplicate_of: Option<String>,
    pub reprompted: bool,
    pub raw_composer_output: String,
}

impl TurnView {
    fn new(t: &TurnResult, engine: &DialogueEngine) -> Self {
        Self {
            user_request: t.user_request.clone(),
            extracted_tags: t.extracted_tags.clone(),
            retrieved: t.retrieved.iter().map(|c| CandidateView::new(c, engine)).collect(),
            commentary: t.commentary.clone(),
            abc: t.abc.clone(),
            tune_found: t.tune.is_some(),
            validation: t.validation.clone(),
            duplicate_of: t.duplicate_of.clone(),
            reprompted: t.reprompted,
            raw_composer_output: t.raw_composer_output.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub settings: SessionSettings,
    pub transcript: Vec<ChatMessage>,
    pub turns: Vec<TurnView>,
}

impl SessionView {
    pub fn new(s: &Session, engine: &DialogueEngine) -> Self {
        Self {
            session_id: s.id.clone(),
            created_at: s.created_at,
            settings: s.settings.clone(),
            transcript: s.transcript.clone(),
            turns: s.turns.iter().map(|t| TurnView::new(t, engine)).collect(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageRequest {
    text: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateRequest {
    abc: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RetrieveRequest {
    text: Option<String>,
    tags: Option<Vec<String>>,
    k: Option<usize>,
}

#[derive(Serialize)]
struct RetrieveResponse {
    tags: TagSet,
    /// Present when tags came from the retrieval model.
    #[serde(skip_serializing_if = "Option::is_none")]
    tag_reply: Option<String>,
    candidates: Vec<CandidateView>,
}

type Shared = State<Arc<AppState>>;

async fn create_session(State(state): Shared) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let mut sessions = state.sessions.write().unwrap();
    if sessions.len() >= state.max_sessions {
        return Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "too_many_sessions",
            format!("session limit of {} reached", state.max_sessions),
        ));
    }
    let handle = state.engine.new_session();
    let id = handle.id();
    sessions.insert(id.clone(), Arc::new(handle));
    tracing::info!(session = %id, "session created");
    Ok((StatusCode::CREATED, Json(serde_json::json!({ "session_id": id }))))
}

async fn get_session(State(state): Shared, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let handle = state.session(&id)?;
    Ok(Json(SessionView::new(&handle.snapshot(), &state.engine)))
}

async fn post_message(
    State(state): Shared,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<MessageRequest>,
) -> Result<Json<TurnView>, ApiError> {
    let handle = state.session(&id)?;
    let turn = tokio::time::timeout(state.request_timeout, state.engine.handle_request(&handle, &req.text))
        .await
        .map_err(|_| ApiError::new(StatusCode::GATEWAY_TIMEOUT, "timeout", "the turn took too long and was abandoned"))??;
    Ok(Json(TurnView::new(&turn, &state.engine)))
}

async fn post_validate(ApiJson(req): ApiJson<ValidateRequest>) -> Result<Json<serde_json::Value>, ApiError> {
    let tune = parse_tune(&req.abc)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "parse_error", e.to_string()))?;
    Ok(Json(serde_json::json!({ "issues": validate(&tune) })))
}

async fn post_retrieve(
    State(state): Shared,
    ApiJson(req): ApiJson<RetrieveRequest>,
) -> Result<Json<RetrieveResponse>, ApiError> {
    let engine = &state.engine;
    let mut cfg = engine.config().retrieval;
    if let Some(k) = req.k {
        cfg = RetrievalConfig { k, ..cfg };
    }
    cfg.check().map_err(ApiError::bad_request)?;
    let (tags, tag_reply) = match (req.text, req.tags) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(ApiError::bad_request("give exactly one of \"text\" or \"tags\""));
        }
        (None, Some(tags)) => (tags.iter().collect::<TagSet>(), None),
        (Some(text), None) => {
            let c = engine.config();
            let extraction = extract_tags(
                &text,
                engine.index().vocabulary(),
                engine.retrieval_backend(),
                &c.retrieval_model,
                &c.templates.retrieval,
            )
            .await
            .map_err(|e| match e {
                RetrievalError::Llm(source) => upstream("retrieval", &source),
                RetrievalError::EmptyVocabulary => {
                    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_vocabulary", e.to_string())
                }
                other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
            })?;
            (extraction.tags, Some(extraction.raw))
        }
    };
    let candidates = rank(&tags, engine.index(), &cfg)
        .iter()
        .map(|c| CandidateView::new(c, engine))
        .collect();
    Ok(Json(RetrieveResponse {
        tags,
        tag_reply,
        candidates,
    }))
}

async fn corpus_tags(State(state): Shared) -> Json<BTreeMap<TagFamily, Vec<String>>> {
    Json(state.engine.index().vocabulary_by_family())
}

async fn healthz(State(state): Shared) -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "entries": state.engine.index().len() }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/messages", post(post_message))
        .route("/api/validate", post(post_validate))
        .route("/api/retrieve", post(post_retrieve))
        .route("/api/corpus/tags", get(corpus_tags))
        .route("/healthz", get(healthz))
        .fallback(not_found)
        .with_state(state)
}

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;

use crate::corpus::{load_index, CorpusIndex};
use crate::dialogue::{DialogueConfig, DialogueEngine, Templates, DEFAULT_MAX_TURNS};
use crate::llm::{ChatBackend, HttpBackend, MockBackend, MockRule, ModelConfig};
use crate::retrieval::RetrievalConfig;

use super::StartupError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Http,
    /// Scripted replies; for tests and offline demos.
    Mock,
}

/// One `[retrieval_model]` / `[composer_model]` table. The API key is never
/// part of it; see [`crate::llm::API_KEY_ENV`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default)]
    pub backend: BackendKind,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout_ms: Option<u64>,
    pub max_retries: Option<u32>,
    pub retry_base_delay_ms: Option<u64>,
    /// Replies consumed in order.
    #[serde(default)]
    pub mock_replies: Vec<String>,
    /// Replies chosen by a substring of the latest user message.
    #[serde(default)]
    pub mock_rules: Vec<MockRule>,
    /// Delay added to every mock reply.
    pub mock_delay_ms: Option<u64>,
}

impl ProfileConfig {
    fn model_config(&self, name: &str, default_temperature: f64) -> Result<ModelConfig, StartupError> {
        let bad = |m: String| StartupError::Config(format!("{name}: {m}"));
        let (endpoint, model) = match self.backend {
            BackendKind::Http => (
                self.endpoint.clone().ok_or_else(|| bad("endpoint is required".into()))?,
                self.model.clone().ok_or_else(|| bad("model is required".into()))?,
            ),
            BackendKind::Mock => (
                self.endpoint.clone().unwrap_or_else(|| "mock://".into()),
                self.model.clone().unwrap_or_else(|| "mock".into()),
            ),
        };
        let mut cfg = ModelConfig::new(endpoint, model).with_temperature(self.temperature.unwrap_or(default_temperature));
        if let Some(v) = self.max_tokens {
            cfg.max_tokens = v;
        }
        if let Some(v) = self.timeout_ms {
            cfg.timeout = Duration::from_millis(v);
        }
        if let Some(v) = self.max_retries {
            cfg.max_retries = v;
        }
        if let Some(v) = self.retry_base_delay_ms {
            cfg.retry_base_delay = Duration::from_millis(v);
        }
        cfg.check().map_err(bad)?;
        Ok(cfg)
    }

    fn backend(&self, name: &str, http: &HttpBackend) -> Result<Arc<dyn ChatBackend>, StartupError> {
        match self.backend {
            BackendKind::Http => Ok(Arc::new(http.clone())),
            BackendKind::Mock => {
                let mock = match (self.mock_replies.is_empty(), self.mock_rules.is_empty()) {
                    (false, true) => MockBackend::replies(self.mock_replies.clone()),
                    (true, false) => MockBackend::rules(self.mock_rules.clone()),
                    _ => {
                        return Err(StartupError::Config(format!(
                            "{name}: a mock backend needs exactly one of mock_replies or mock_rules"
                        )))
                    }
                };
                let delay = Duration::from_millis(self.mock_delay_ms.unwrap_or(0));
                Ok(Arc::new(mock.with_delay(delay)))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplatePaths {
    pub composer_system: Option<PathBuf>,
    pub turn: Option<PathBuf>,
    pub retrieval: Option<PathBuf>,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_k() -> usize {
    3
}

fn default_request_timeout_ms() -> u64 {
    300_000
}

fn default_max_sessions() -> usize {
    1000
}

fn default_max_turns() -> usize {
    DEFAULT_MAX_TURNS
}

fn default_llm_concurrency() -> usize {
    4
}

/// Service configuration, read from TOML. Relative paths are resolved
/// against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    pub corpus_index: PathBuf,
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub include_zero_similarity: bool,
    #[serde(default = "default_request_timeout_ms")]
    pub request_timeout_ms: u64,
    #[serde(default = "default_max_sessions")]
    pub max_sessions: usize,
    #[serde(default = "default_max_turns")]
    pub max_turns: usize,
    #[serde(default = "default_llm_concurrency")]
    pub llm_concurrency: usize,
    #[serde(default)]
    pub cors_origins: Vec<String>,
    /// Sessions are written here as JSON on shutdown when set.
    pub session_snapshot: Option<PathBuf>,
    #[serde(default)]
    pub templates: TemplatePaths,
    pub retrieval_model: ProfileConfig,
    pub composer_model: ProfileConfig,
}

impl AppConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, StartupError> {
        let mut cfg: AppConfig = toml::from_str(text).map_err(|e| StartupError::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        resolve(&mut cfg.corpus_index);
        if let Some(p) = cfg.session_snapshot.as_mut() {
            resolve(p);
        }
        for p in [
            &mut cfg.templates.composer_system,
            &mut cfg.templates.turn,
            &mut cfg.templates.retrieval,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        if cfg.k == 0 {
            return Err(StartupError::Config("k must be at least 1".into()));
        }
        if cfg.max_sessions == 0 {
            return Err(StartupError::Config("max_sessions must be positive".into()));
        }
        if cfg.request_timeout_ms == 0 {
            return Err(StartupError::Config("request_timeout_ms must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StartupError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| StartupError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_millis(self.request_timeout_ms)
    }

    /// Loads templates and the corpus index and wires up the backends.
    pub fn build_engine(&self) -> Result<DialogueEngine, StartupError> {
        let templates = Templates::load(
            self.templates.composer_system.as_deref(),
            self.templates.turn.as_deref(),
            self.templates.retrieval.as_deref(),
        )?;
        let index: CorpusIndex = load_index(&self.corpus_index).map_err(|source| StartupError::Corpus {
            path: self.corpus_index.display().to_string(),
            source,
        })?;
        let http = HttpBackend::from_env(self.llm_concurrency);
        let dialogue = DialogueConfig {
            retrieval: RetrievalConfig {
                k: self.k,
                include_zero_similarity: self.include_zero_similarity,
            },
            retrieval_model: self.retrieval_model.model_config("retrieval_model", 0.0)?,
            composer_model: self.composer_model.model_config("composer_model", 0.7)?,
            templates,
            max_turns: self.max_turns,
        };
        Ok(DialogueEngine::new(
            Arc::new(index),
            self.retrieval_model.backend("retrieval_model", &http)?,
            self.composer_model.backend("composer_model", &http)?,
            dialogue,
        )?)
    }
}

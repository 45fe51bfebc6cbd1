use std::path::Path;

use crate::corpus::{normalize_tag, TagFamily, TagSet};
use crate::llm::{ChatBackend, ChatMessage, LlmError, ModelConfig};
use crate::template::{self, TemplateError};

const DEFAULT_TEMPLATE: &str = include_str!("../../templates/retrieval_system.txt");
const PLACEHOLDERS: [&str; 2] = ["vocabulary_by_family", "format_instruction"];

pub const FORMAT_INSTRUCTION: &str = "Answer with the chosen tags only, written exactly as listed, \
as a comma-separated list inside curly braces, for example {jig, dorian, 6/8}. \
If no tag fits, answer {}.";

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("the corpus has no tags to choose from")]
    EmptyVocabulary,
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("cannot read template {path}: {source}")]
    TemplateFile { path: String, source: std::io::Error },
}

/// The retrieval model's system prompt template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalPrompt {
    template: String,
}

impl Default for RetrievalPrompt {
    fn default() -> Self {
        Self {
            template: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

impl RetrievalPrompt {
    /// Both `{vocabulary_by_family}` and `{format_instruction}` must appear.
    pub fn new(template: impl Into<String>) -> Result<Self, TemplateError> {
        let template = template.into();
        template::check(&template, &PLACEHOLDERS, &PLACEHOLDERS)?;
        Ok(Self { template })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RetrievalError::TemplateFile {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::new(text)?)
    }

    pub fn render(&self, vocabulary: &TagSet) -> Result<String, TemplateError> {
        let vocab = vocabulary_listing(vocabulary);
        template::render(
            &self.template,
            &[("vocabulary_by_family", &vocab), ("format_instruction", FORMAT_INSTRUCTION)],
        )
    }
}

/// One line per non-empty family: `tune type: jig, reel`.
fn vocabulary_listing(vocabulary: &TagSet) -> String {
    TagFamily::ALL
        .into_iter()
        .filter_map(|f| {
            let tags = vocabulary.family(f);
            (!tags.is_empty()).then(|| format!("{}: {}", f.label(), tags.join(", ")))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct TagExtraction {
    pub tags: TagSet,
    /// The model's reply as received.
    pub raw: String,
    /// Normalized reply tokens that are not in the vocabulary.
    pub dropped: Vec<String>,
}

/// Splits a reply such as `{jig, reel}`, `["jig"; "reel"]` or one tag per line
/// into normalized tokens, keeping vocabulary members. When the reply has a
/// `{...}` group only its contents are read, so a leading remark is ignored.
pub fn parse_tag_reply(reply: &str, vocabulary: &TagSet) -> (TagSet, Vec<String>) {
    let inner = match (reply.find('{'), reply.rfind('}')) {
        (Some(open), Some(close)) if open < close => &reply[open + 1..close],
        _ => reply,
    };
    let cleaned: String = inner
        .chars()
        .map(|c| if matches!(c, '{' | '}' | '[' | ']' | '"' | '\'' | '`') { ' ' } else { c })
        .collect();
    let mut tags = TagSet::new();
    let mut dropped = Vec::new();
    for token in cleaned.split([',', ';', '\n']) {
        let token = normalize_tag(token.trim_end_matches('.'));
        if token.is_empty() {
            continue;
        }
        if vocabulary.contains(&token) {
            tags.insert(&token);
        } else if !dropped.contains(&token) {
            dropped.push(token);
        }
    }
    (tags, dropped)
}

/// Asks the retrieval model which vocabulary tags fit `request`. The model
/// sees only this request, not the conversation so far.
pub async fn extract_tags(
    request: &str,
    vocabulary: &TagSet,
    backend: &dyn ChatBackend,
    cfg: &ModelConfig,
    prompt: &RetrievalPrompt,
) -> Result<TagExtraction, RetrievalError> {
    if vocabulary.is_empty() {
        return Err(RetrievalError::EmptyVocabulary);
    }
    let messages = [ChatMessage::system(prompt.render(vocabulary)?), ChatMessage::user(request)];
    let reply = backend.complete(&messages, cfg).await?;
    let (tags, dropped) = parse_tag_reply(&reply.content, vocabulary);
    Ok(TagExtraction {
        tags,
        raw: reply.content,
        dropped,
    })
}

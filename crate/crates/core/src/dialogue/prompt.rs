use std::path::Path;

use crate::corpus::CorpusEntry;
use crate::llm::ChatMessage;
use crate::retrieval::RetrievalPrompt;
use crate::template;

use super::DialogueError;

const COMPOSER_SYSTEM: &str = include_str!("../../templates/composer_system.txt");
const TURN: &str = include_str!("../../templates/turn.txt");

pub const OUTPUT_FORMAT: &str = "Answer in two parts. First write a short commentary on the piece you are \
about to write: its tune type, mode, meter and character, and how you will shape it. Then write exactly one \
complete tune in abc notation inside a fenced code block (```abc ... ```), with the header fields X, T, M, L \
and K. Write nothing after the tune.";

/// Sent once when the composer's reply has no tune in it.
pub const REPROMPT: &str = "Your reply did not contain a tune in abc notation. Please answer again: a short \
commentary first, then one complete tune in abc notation inside a fenced code block.";

const SYSTEM_PLACEHOLDERS: [&str; 1] = ["output_format"];
const TURN_PLACEHOLDERS: [&str; 2] = ["examples", "request"];

/// Prompt templates for one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    composer_system: String,
    turn: String,
    pub retrieval: RetrievalPrompt,
}

impl Default for Templates {
    fn default() -> Self {
        Self {
            composer_system: COMPOSER_SYSTEM.to_string(),
            turn: TURN.to_string(),
            retrieval: RetrievalPrompt::default(),
        }
    }
}

fn missing(what: &str, e: impl std::fmt::Display) -> DialogueError {
    DialogueError::MissingTemplate(format!("{what}: {e}"))
}

fn read(path: &Path) -> Result<String, DialogueError> {
    std::fs::read_to_string(path).map_err(|e| missing(&path.display().to_string(), e))
}

impl Templates {
    /// The composer system template may use `{output_format}`; the turn
    /// template must contain `{request}` and may contain `{examples}`.
    pub fn new(composer_system: String, turn: String, retrieval: RetrievalPrompt) -> Result<Self, DialogueError> {
        template::check(&composer_system, &SYSTEM_PLACEHOLDERS, &[])
            .map_err(|e| missing("composer system template", e))?;
        template::check(&turn, &TURN_PLACEHOLDERS, &["request"]).map_err(|e| missing("turn template", e))?;
        Ok(Self {
            composer_system,
            turn,
            retrieval,
        })
    }

    /// Loads the given files, falling back to the built-in text for any
    /// path that is `None`.
    pub fn load(
        composer_system: Option<&Path>,
        turn: Option<&Path>,
        retrieval: Option<&Path>,
    ) -> Result<Self, DialogueError> {
        let defaults = Self::default();
        let system = composer_system.map(read).transpose()?.unwrap_or(defaults.composer_system);
        let turn = turn.map(read).transpose()?.unwrap_or(defaults.turn);
        let retrieval = match retrieval {
            Some(p) => RetrievalPrompt::from_file(p).map_err(|e| missing("retrieval template", e))?,
            None => defaults.retrieval,
        };
        Self::new(system, turn, retrieval)
    }

    pub fn system_message(&self) -> ChatMessage {
        let text = template::render(&self.composer_system, &[("output_format", OUTPUT_FORMAT)])
            .expect("placeholders checked at construction");
        ChatMessage::system(text)
    }

    /// One user message: the examples block (left out entirely when there are
    /// no examples) followed by the request verbatim.
    pub fn build_prompt(&self, examples: &[&CorpusEntry], request: &str) -> ChatMessage {
        let block = examples_block(examples);
        let text = template::render(&self.turn, &[("examples", &block), ("request", request)])
            .expect("placeholders checked at construction");
        ChatMessage::user(text)
    }
}

fn examples_block(examples: &[&CorpusEntry]) -> String {
    if examples.is_empty() {
        return String::new();
    }
    let mut out = String::from("Example tunes from the database, best match first:\n\n");
    for (i, e) in examples.iter().enumerate() {
        out.push_str(&format!("--- Example {} ---\ntags: {}\n", i + 1, e.tags));
        out.push_str(e.abc.trim_end());
        out.push_str("\n\n");
    }
    out.push_str("--- End of examples ---\n\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TagSet;

    fn entry(id: &str, abc: &str) -> CorpusEntry {
        CorpusEntry::new(id, id, ["jig", "6/8"].into_iter().collect::<TagSet>(), abc)
    }

    #[test]
    fn zero_shot_is_request_alone() {
        let t = Templates::default();
        let msg = t.build_prompt(&[], "Generate a piece of irish folk music");
        assert_eq!(msg, ChatMessage::user("Generate a piece of irish folk music"));
    }

    #[test]
    fn examples_in_rank_order_then_request() {
        let t = Templates::default();
        let (a, b, c) = (
            entry("a", "X:1\nK:D\nAAA|"),
            entry("b", "X:2\nK:D\nBBB|\n"),
            entry("c", "X:3\nK:D\nccc|"),
        );
        let msg = t.build_prompt(&[&b, &a, &c], "Make a jig");
        let text = &msg.content;
        let pos = |s: &str| text.find(s).unwrap();
        assert!(pos("BBB|") < pos("AAA|") && pos("AAA|") < pos("ccc|"));
        assert!(text.ends_with("--- End of examples ---\n\nMake a jig"));
        assert_eq!(text.matches("tags: 6/8, jig\n").count(), 3);
        assert_eq!(msg, t.build_prompt(&[&b, &a, &c], "Make a jig"));
    }

    #[test]
    fn system_prompt_has_format_instruction() {
        let msg = Templates::default().system_message();
        assert!(msg.content.contains(OUTPUT_FORMAT));
        assert!(!msg.content.contains("{output_format}"));
    }

    #[test]
    fn bad_templates() {
        let r = RetrievalPrompt::default;
        assert!(matches!(
            Templates::new("Hi {composer_name}".into(), TURN.into(), r()),
            Err(DialogueError::MissingTemplate(_))
        ));
        assert!(matches!(
            Templates::new(COMPOSER_SYSTEM.into(), "{examples}".into(), r()),
            Err(DialogueError::MissingTemplate(_))
        ));
        assert!(matches!(
            Templates::load(Some(Path::new("/no/such/template.txt")), None, None),
            Err(DialogueError::MissingTemplate(_))
        ));
        assert!(Templates::new("plain".into(), "{request}".into(), r()).is_ok());
    }
}

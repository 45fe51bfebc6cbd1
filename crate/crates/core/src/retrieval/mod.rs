//! Tag-based example selection: a query tag set is compared with every
//! tagged entry by Jaccard similarity and the best `k` become few-shot
//! examples.

mod extract;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::abc::Rational;
use crate::corpus::{CorpusIndex, TagSet};

pub use extract::{extract_tags, parse_tag_reply, RetrievalError, RetrievalPrompt, TagExtraction, FORMAT_INSTRUCTION};

/// `|a ∩ b| / |a ∪ b|`, exactly. Two empty sets give 0.
pub fn jaccard(a: &TagSet, b: &TagSet) -> Rational {
    let union = a.union_len(b);
    if union == 0 {
        return Rational::from_integer(0);
    }
    Rational::new(a.intersection_len(b) as i64, union as i64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetrievalConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub include_zero_similarity: bool,
}

fn default_k() -> usize {
    3
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: default_k(),
            include_zero_similarity: false,
        }
    }
}

impl RetrievalConfig {
    pub fn with_k(k: usize) -> Self {
        Self {
            k,
            ..Self::default()
        }
    }

    /// Every candidate, fully ordered.
    pub fn unbounded() -> Self {
        Self::with_k(usize::MAX)
    }

    pub fn check(&self) -> Result<(), String> {
        if self.k == 0 {
            Err("k must be at least 1".into())
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub entry_id: String,
    #[serde(with = "crate::rational::serde_text")]
    pub similarity: Rational,
    pub matched_tags: TagSet,
}

/// Retrievable entries ordered by similarity (highest first), ties by
/// ascending id, truncated to `cfg.k`. Zero-similarity entries are left out
/// unless the config asks for them.
pub fn rank(query: &TagSet, index: &CorpusIndex, cfg: &RetrievalConfig) -> Vec<RankedCandidate> {
    let ids: BTreeSet<&str> = if cfg.include_zero_similarity {
        index
            .entries()
            .filter(|e| e.is_retrievable())
            .map(|e| e.id.as_str())
            .collect()
    } else {
        query
            .iter()
            .flat_map(|t| index.ids_with_tag(t))
            .map(String::as_str)
            .collect()
    };
    let mut ranked: Vec<RankedCandidate> = ids
        .into_iter()
        .filter_map(|id| index.get(id))
        .map(|e| RankedCandidate {
            entry_id: e.id.clone(),
            similarity: jaccard(query, &e.tags),
            matched_tags: query.intersection(&e.tags),
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.similarity
            .cmp(&a.similarity)
            .then_with(|| a.entry_id.cmp(&b.entry_id))
    });
    ranked.truncate(cfg.k);
    ranked
}

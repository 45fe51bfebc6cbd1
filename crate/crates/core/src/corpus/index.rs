use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::tags::{TagFamily, TagSet};
use super::CorpusError;
use crate::abc::{normalize, parse_tune, Tune};

/// One tagged tune from the database.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub id: String,
    pub title: String,
    pub tags: TagSet,
    pub abc: String,
    #[serde(skip)]
    pub parsed: Option<Tune>,
    /// Why `parsed` is missing.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parse_failure: Option<String>,
    /// Canonical text from [`normalize`]; absent when the abc did not parse.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub canonical: Option<String>,
}

impl CorpusEntry {
    pub fn new(id: impl Into<String>, title: impl Into<String>, tags: TagSet, abc: impl Into<String>) -> Self {
        let abc = abc.into();
        let (parsed, parse_failure, canonical) = match parse_tune(&abc) {
            Ok(t) => {
                let canonical = normalize(&t);
                (Some(t), None, Some(canonical))
            }
            Err(e) => (None, Some(e.to_string()), None),
        };
        Self {
            id: id.into(),
            title: title.into(),
            tags,
            abc,
            parsed,
            parse_failure,
            canonical,
        }
    }

    /// Only parsed, tagged entries may be offered as examples.
    pub fn is_retrievable(&self) -> bool {
        self.parsed.is_some() && !self.tags.is_empty()
    }
}

/// The immutable, searchable collection of corpus entries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusIndex {
    entries: BTreeMap<String, CorpusEntry>,
    vocabulary: TagSet,
    inverted: BTreeMap<String, Vec<String>>,
    canonical: BTreeMap<String, Vec<String>>,
}

impl CorpusIndex {
    pub fn build(entries: impl IntoIterator<Item = CorpusEntry>) -> Result<Self, CorpusError> {
        let mut map = BTreeMap::new();
        for entry in entries {
            if map.contains_key(&entry.id) {
                return Err(CorpusError::DuplicateId(entry.id));
            }
            map.insert(entry.id.clone(), entry);
        }
        let mut index = Self {
            entries: map,
            ..Default::default()
        };
        index.rebuild_derived();
        Ok(index)
    }

    fn rebuild_derived(&mut self) {
        let (vocabulary, inverted, canonical) = derive(&self.entries);
        self.vocabulary = vocabulary;
        self.inverted = inverted;
        self.canonical = canonical;
    }

    /// Recomputes vocabulary, inverted lists and canonical lookup from the
    /// entries alone. Equal to the stored structures for any built index.
    pub fn rederive(&self) -> Derived {
        derive(&self.entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CorpusEntry> {
        self.entries.get(id)
    }

    /// Entries in ascending id order.
    pub fn entries(&self) -> impl Iterator<Item = &CorpusEntry> {
        self.entries.values()
    }

    pub fn vocabulary(&self) -> &TagSet {
        &self.vocabulary
    }

    pub fn vocabulary_by_family(&self) -> BTreeMap<TagFamily, Vec<String>> {
        TagFamily::ALL
            .into_iter()
            .map(|f| {
                let tags = self.vocabulary.family(f).into_iter().map(String::from).collect();
                (f, tags)
            })
            .collect()
    }

    /// Retrievable entry ids carrying `tag`, ascending.
    pub fn ids_with_tag(&self, tag: &str) -> &[String] {
        self.inverted.get(tag).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn inverted(&self) -> &BTreeMap<String, Vec<String>> {
        &self.inverted
    }

    /// Id of an entry whose canonical text equals the tune's, if any. Exact
    /// copies only; the smallest id wins when several entries match.
    pub fn contains_duplicate(&self, tune: &Tune) -> Option<&str> {
        self.canonical
            .get(&normalize(tune))
            .and_then(|ids| ids.first())
            .map(String::as_str)
    }
}

/// Vocabulary, inverted lists and canonical-text lookup.
pub type Derived = (TagSet, BTreeMap<String, Vec<String>>, BTreeMap<String, Vec<String>>);

fn derive(entries: &BTreeMap<String, CorpusEntry>) -> Derived {
    let mut vocabulary = TagSet::new();
    let mut inverted: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut canonical: BTreeMap<String, Vec<String>> = BTreeMap::new();
    // BTreeMap iteration is id-ordered, so every list comes out sorted.
    for entry in entries.values() {
        vocabulary.extend_from(&entry.tags);
        if entry.is_retrievable() {
            for tag in entry.tags.iter() {
                inverted.entry(tag.to_string()).or_default().push(entry.id.clone());
            }
        }
        if let Some(c) = &entry.canonical {
            canonical.entry(c.clone()).or_default().push(entry.id.clone());
        }
    }
    (vocabulary, inverted, canonical)
}

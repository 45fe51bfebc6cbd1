//! The tagged tune database: ingestion, the searchable index and its file
//! format.

mod index;
mod ingest;
mod store;
mod tags;

pub use index::{CorpusEntry, CorpusIndex};
pub use ingest::{ingest, FieldMapping, IngestReport};
pub use store::{load_index, read_index, save_index, write_index, FORMAT_VERSION};
pub use tags::{mode_from_key, normalize_tag, TagFamily, TagSet};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("duplicate entry id {0:?}")]
    DuplicateId(String),
    #[error("bad field mapping: {0}")]
    Mapping(String),
    #[error("index file has format version {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt index file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PartialEq for CorpusError {
    fn eq(&self, other: &Self) -> bool {
        use CorpusError::*;
        match (self, other) {
            (DuplicateId(a), DuplicateId(b)) => a == b,
            (Mapping(a), Mapping(b)) => a == b,
            (VersionMismatch { found: a, expected: x }, VersionMismatch { found: b, expected: y }) => a == b && x == y,
            (CorruptFile(a), CorruptFile(b)) => a == b,
            (Io(a), Io(b)) => a.kind() == b.kind(),
            _ => false,
        }
    }
}

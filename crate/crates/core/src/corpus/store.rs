//! Index file format:
//!
//! ```text
//! FOLKRAG-INDEX
//! version: 1
//! sha256: <hex digest of the payload>
//! <payload: JSON array of entries {id, title, tags, abc}>
//! ```
//!
//! Derived structures (parsed tunes, canonical texts, inverted lists) are not
//! stored; they are rebuilt on load.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::index::{CorpusEntry, CorpusIndex};
use super::tags::TagSet;
use super::CorpusError;
use CorpusError::CorruptFile;

const MAGIC: &str = "FOLKRAG-INDEX";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StoredEntry {
    id: String,
    title: String,
    tags: TagSet,
    abc: String,
}

pub fn write_index(index: &CorpusIndex) -> Vec<u8> {
    let stored: Vec<StoredEntry> = index
        .entries()
        .map(|e| StoredEntry {
            id: e.id.clone(),
            title: e.title.clone(),
            tags: e.tags.clone(),
            abc: e.abc.clone(),
        })
        .collect();
    let payload = serde_json::to_vec(&stored).expect("entries serialize");
    let digest = hex::encode(Sha256::digest(&payload));
    let mut out = format!("{MAGIC}\nversion: {FORMAT_VERSION}\nsha256: {digest}\n").into_bytes();
    out.extend_from_slice(&payload);
    out
}

fn header_line<'a>(bytes: &'a [u8], pos: &mut usize, what: &str) -> Result<&'a str, CorpusError> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CorpusError::CorruptFile(format!("truncated before {what}")))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end]).map_err(|_| CorruptFile(format!("{what} is not text")))
}

pub fn read_index(bytes: &[u8]) -> Result<CorpusIndex, CorpusError> {
    let mut pos = 0;
    if header_line(bytes, &mut pos, "magic")? != MAGIC {
        return Err(CorruptFile("not an index file".into()));
    }
    let version = header_line(bytes, &mut pos, "version")?
        .strip_prefix("version: ")
        .and_then(|v| v.trim().parse::<u32>().ok())
        .ok_or_else(|| CorruptFile("bad version line".into()))?;
    if version != FORMAT_VERSION {
        return Err(CorpusError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let digest = header_line(bytes, &mut pos, "checksum")?
        .strip_prefix("sha256: ")
        .ok_or_else(|| CorruptFile("bad checksum line".into()))?
        .to_string();
    let payload = &bytes[pos..];
    if hex::encode(Sha256::digest(payload)) != digest {
        return Err(CorruptFile("checksum mismatch".into()));
    }
    let stored: Vec<StoredEntry> =
        serde_json::from_slice(payload).map_err(|e| CorruptFile(format!("payload: {e}")))?;
    CorpusIndex::build(
        stored
            .into_iter()
            .map(|s| CorpusEntry::new(s.id, s.title, s.tags, s.abc)),
    )
}

/// Writes to a sibling temporary file and renames it into place.
pub fn save_index(index: &CorpusIndex, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&write_index(index))?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<CorpusIndex, CorpusError> {
    read_index(&fs::read(path)?)
}

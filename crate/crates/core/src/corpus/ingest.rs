//! Loading a tagged tune dump.
//!
//! Input is one JSON object per line (a single top-level JSON array is also
//! accepted). A [`FieldMapping`] names which source fields hold the abc, tune
//! type, key/mode, meter, title and id, since dump schemas drift between
//! releases.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::index::{CorpusEntry, CorpusIndex};
use super::tags::{mode_from_key, normalize_tag, TagSet};
use super::CorpusError;
use crate::abc::{parse_unit_length, Rational};

/// Source field names for each piece of an entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMapping {
    pub abc: String,
    #[serde(rename = "type", default)]
    pub tune_type: Option<String>,
    /// Field holding a key such as `Dmajor`; only the mode is used as a tag.
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub meter: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub id: Option<String>,
    /// `L:` written into synthesized headers for body-only abc.
    #[serde(default = "default_unit_length")]
    pub unit_length: String,
}

fn default_unit_length() -> String {
    "1/8".to_string()
}

impl FieldMapping {
    /// Field names used by thesession.org data dumps.
    pub fn thesession() -> Self {
        Self {
            abc: "abc".into(),
            tune_type: Some("type".into()),
            mode: Some("mode".into()),
            meter: Some("meter".into()),
            title: Some("name".into()),
            id: Some("setting_id".into()),
            unit_length: default_unit_length(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CorpusError> {
        toml::from_str(text).map_err(|e| CorpusError::Mapping(e.to_string()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    /// Entries kept, including flagged ones.
    pub loaded: usize,
    /// Kept but not retrievable (no tags or abc that would not parse).
    pub flagged: usize,
    /// Malformed records dropped.
    pub skipped: usize,
    pub notes: Vec<String>,
}

impl std::fmt::Display for IngestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "loaded {} entries ({} flagged non-retrievable), skipped {} records",
            self.loaded, self.flagged, self.skipped
        )?;
        for note in &self.notes {
            writeln!(f, "  {note}")?;
        }
        Ok(())
    }
}

fn field_text(record: &Map<String, Value>, name: Option<&str>) -> Option<String> {
    match record.get(name?)? {
        Value::String(s) if !s.trim().is_empty() => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn has_key_line(abc: &str) -> bool {
    abc.lines().any(|l| l.trim_start().starts_with("K:"))
}

pub fn ingest<R: BufRead>(dump: R, mapping: &FieldMapping) -> Result<(CorpusIndex, IngestReport), CorpusError> {
    let unit: Rational = parse_unit_length(&mapping.unit_length)
        .ok_or_else(|| CorpusError::Mapping(format!("bad unit_length {:?}", mapping.unit_length)))?;
    let mut report = IngestReport::default();
    let mut entries = Vec::new();
    let mut seen = std::collections::BTreeSet::new();

    for (ordinal, record) in records(dump)?.into_iter().enumerate() {
        let n = ordinal + 1;
        let record = match record {
            Ok(Value::Object(map)) => map,
            Ok(_) => {
                report.skipped += 1;
                report.notes.push(format!("record {n}: not a JSON object; skipped"));
                continue;
            }
            Err(e) => {
                report.skipped += 1;
                report.notes.push(format!("record {n}: {e}; skipped"));
                continue;
            }
        };
        let Some(body) = field_text(&record, Some(&mapping.abc)) else {
            report.skipped += 1;
            report.notes.push(format!("record {n}: missing abc field {:?}; skipped", mapping.abc));
            continue;
        };

        let tune_type = field_text(&record, mapping.tune_type.as_deref());
        let key = field_text(&record, mapping.mode.as_deref());
        let meter = field_text(&record, mapping.meter.as_deref());
        let title = field_text(&record, mapping.title.as_deref()).unwrap_or_default();
        let id = field_text(&record, mapping.id.as_deref()).unwrap_or_else(|| format!("entry-{n}"));

        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }

        let mut tags = TagSet::new();
        if let Some(t) = &tune_type {
            tags.insert(t);
        }
        if let Some(k) = &key {
            match mode_from_key(k) {
                Some(mode) => {
                    tags.insert(mode.name());
                }
                None => report
                    .notes
                    .push(format!("record {n} ({id}): unrecognised mode in {k:?}; mode tag omitted")),
            }
        }
        if let Some(m) = &meter {
            tags.insert(m);
        }

        let body = body.replace("\r\n", "\n");
        let abc = if has_key_line(&body) {
            body
        } else {
            // Body-only abc: rebuild the header from the record's fields.
            let mut h = format!("X:{n}\n");
            if !title.is_empty() {
                h.push_str(&format!("T:{title}\n"));
            }
            if let Some(t) = &tune_type {
                h.push_str(&format!("R:{}\n", normalize_tag(t)));
            }
            if let Some(m) = &meter {
                h.push_str(&format!("M:{}\n", m.trim()));
            }
            h.push_str(&format!("L:{}/{}\n", unit.numer(), unit.denom()));
            if let Some(k) = &key {
                h.push_str(&format!("K:{}\n", k.trim()));
            }
            h + body.trim()
        };

        let entry = CorpusEntry::new(id, title, tags, abc);
        if !entry.is_retrievable() {
            report.flagged += 1;
            let why = entry
                .parse_failure
                .clone()
                .unwrap_or_else(|| "no tags".to_string());
            report.notes.push(format!("record {n} ({}): flagged non-retrievable: {why}", entry.id));
        }
        report.loaded += 1;
        entries.push(entry);
    }

    let index = CorpusIndex::build(entries)?;
    Ok((index, report))
}

type RecordResult = Result<Value, serde_json::Error>;

fn records<R: BufRead>(mut dump: R) -> Result<Vec<RecordResult>, CorpusError> {
    let mut text = String::new();
    dump.read_to_string(&mut text).map_err(CorpusError::Io)?;
    if text.trim_start().starts_with('[') {
        return match serde_json::from_str::<Vec<Value>>(&text) {
            Ok(values) => Ok(values.into_iter().map(Ok).collect()),
            Err(e) => Ok(vec![Err(e)]),
        };
    }
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str::<Value>)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(lines: &str) -> Result<(CorpusIndex, IngestReport), CorpusError> {
        ingest(lines.as_bytes(), &FieldMapping::thesession())
    }

    #[test]
    fn tags_from_fields() {
        let (index, report) = run(
            r#"{"setting_id": 1, "name": "Kesh", "type": "jig", "mode": "Ddorian", "meter": "6/8", "abc": "|:A|dAF DAF:|"}"#,
        )
        .unwrap();
        assert_eq!(report.loaded, 1);
        let e = index.get("1").unwrap();
        assert_eq!(e.tags, ["jig", "dorian", "6/8"].into_iter().collect());
        assert!(e.abc.starts_with("X:1\nT:Kesh\nR:jig\nM:6/8\nL:1/8\nK:Ddorian\n"));
        assert!(e.is_retrievable());
    }

    #[test]
    fn untagged_record_flagged() {
        let (index, report) = run(r#"{"abc": "K:D\nABc|"}"#).unwrap();
        assert_eq!((report.loaded, report.flagged, report.skipped), (1, 1, 0));
        let e = index.get("entry-1").unwrap();
        assert!(!e.is_retrievable());
        assert!(index.inverted().is_empty());
    }

    #[test]
    fn malformed_records_skipped() {
        let (index, report) = run(
            "{\"type\": \"reel\"}\nnot json\n\n{\"abc\": \"K:D\\nA|\", \"type\": \"reel\"}\n[1,2]",
        )
        .unwrap();
        assert_eq!((report.loaded, report.flagged, report.skipped), (1, 0, 3));
        assert!(index.get("entry-3").is_some());
    }

    #[test]
    fn duplicate_ids_abort() {
        let err = run("{\"setting_id\": 5, \"abc\": \"K:D\\nA|\"}\n{\"setting_id\": \"5\", \"abc\": \"K:D\\nB|\"}")
            .unwrap_err();
        assert!(matches!(err, CorpusError::DuplicateId(id) if id == "5"));
    }

    #[test]
    fn unknown_mode_reported() {
        let (index, report) = run(r#"{"abc": "K:D\nA|", "mode": "Hxyz", "type": "reel"}"#).unwrap();
        assert_eq!(index.get("entry-1").unwrap().tags, ["reel"].into_iter().collect());
        assert!(report.notes.iter().any(|n| n.contains("unrecognised mode")));
    }

    #[test]
    fn vocabulary_union_of_three() {
        let (index, _) = run(concat!(
            "{\"setting_id\": \"E1\", \"type\": \"jig\", \"mode\": \"Ddorian\", \"meter\": \"6/8\", \"abc\": \"A|dAF DAF|\"}\n",
            "{\"setting_id\": \"E2\", \"type\": \"reel\", \"mode\": \"Gmajor\", \"meter\": \"4/4\", \"abc\": \"GABc dBGB|\"}\n",
            "{\"setting_id\": \"E3\", \"type\": \"jig\", \"meter\": \"6/8\", \"abc\": \"GAG GAB|\"}\n",
        ))
        .unwrap();
        let expected: TagSet = ["jig", "dorian", "6/8", "reel", "major", "4/4"].into_iter().collect();
        assert_eq!(index.vocabulary(), &expected);
    }

    #[test]
    fn json_array_dump() {
        let (index, report) = run(r#"[{"abc": "K:D\nA|", "type": "polka"}, {"abc": "K:G\nB|", "type": "reel"}]"#).unwrap();
        assert_eq!(report.loaded, 2);
        assert_eq!(index.len(), 2);
    }

    #[test]
    fn mapping_from_toml() {
        let m = FieldMapping::from_toml("abc = \"tune\"\ntype = \"kind\"\n").unwrap();
        assert_eq!(m.abc, "tune");
        assert_eq!(m.tune_type.as_deref(), Some("kind"));
        assert_eq!(m.unit_length, "1/8");
        assert!(FieldMapping::from_toml("typo = 1").is_err());
    }
}

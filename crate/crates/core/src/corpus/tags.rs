use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::abc::Mode;

/// Lowercase, trimmed, inner whitespace collapsed to one space.
pub fn normalize_tag(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// A set of normalized tags. Empty strings never make it in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TagSet(BTreeSet<String>);

impl TagSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, raw: &str) -> bool {
        let tag = normalize_tag(raw);
        !tag.is_empty() && self.0.insert(tag)
    }

    pub fn contains(&self, raw: &str) -> bool {
        self.0.contains(&normalize_tag(raw))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(String::as_str)
    }

    pub fn intersection(&self, other: &TagSet) -> TagSet {
        TagSet(self.0.intersection(&other.0).cloned().collect())
    }

    pub fn intersection_len(&self, other: &TagSet) -> usize {
        self.0.intersection(&other.0).count()
    }

    pub fn union_len(&self, other: &TagSet) -> usize {
        self.0.len() + other.0.len() - self.intersection_len(other)
    }

    pub fn extend_from(&mut self, other: &TagSet) {
        self.0.extend(other.0.iter().cloned());
    }

    /// Tags of one family, in sorted order.
    pub fn family(&self, family: TagFamily) -> Vec<&str> {
        self.iter().filter(|t| TagFamily::of(t) == family).collect()
    }
}

impl<S: AsRef<str>> FromIterator<S> for TagSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        let mut set = TagSet::new();
        for t in iter {
            set.insert(t.as_ref());
        }
        set
    }
}

impl From<Vec<String>> for TagSet {
    fn from(v: Vec<String>) -> Self {
        v.into_iter().collect()
    }
}

impl From<TagSet> for Vec<String> {
    fn from(t: TagSet) -> Self {
        t.0.into_iter().collect()
    }
}

impl fmt::Display for TagSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.iter().collect::<Vec<_>>().join(", "))
    }
}

/// The three kinds of tag the corpus carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagFamily {
    Type,
    Mode,
    Meter,
}

impl TagFamily {
    pub const ALL: [TagFamily; 3] = [TagFamily::Type, TagFamily::Mode, TagFamily::Meter];

    pub fn of(tag: &str) -> TagFamily {
        if is_meter_tag(tag) {
            TagFamily::Meter
        } else if Mode::ALL.iter().any(|m| m.name() == tag) {
            TagFamily::Mode
        } else {
            TagFamily::Type
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TagFamily::Type => "tune type",
            TagFamily::Mode => "mode",
            TagFamily::Meter => "meter",
        }
    }
}

fn is_meter_tag(tag: &str) -> bool {
    match tag.split_once('/') {
        Some((n, d)) => {
            !n.is_empty()
                && !d.is_empty()
                && n.chars().all(|c| c.is_ascii_digit() || c == '+')
                && d.chars().all(|c| c.is_ascii_digit())
        }
        None => matches!(tag, "c" | "c|"),
    }
}

/// Mode tag from a key string such as `Dmajor`, `Ador`, `F#m`, `Bb` or
/// `dorian`. Returns `None` when the residue is not a recognised mode.
pub fn mode_from_key(key: &str) -> Option<Mode> {
    let k = key.trim();
    if let Some(m) = Mode::ALL.iter().find(|m| m.name().eq_ignore_ascii_case(k)) {
        return Some(*m);
    }
    let mut rest = k;
    let first = rest.chars().next()?;
    if !matches!(first.to_ascii_uppercase(), 'A'..='G') {
        return None;
    }
    rest = &rest[1..];
    for acc in ["#", "b", "♯", "♭"] {
        if let Some(r) = rest.strip_prefix(acc) {
            rest = r;
            break;
        }
    }
    let word = rest.trim();
    if word.chars().any(|c| !c.is_ascii_alphabetic()) {
        return None;
    }
    let lower = word.to_ascii_lowercase();
    // Spelled-out names must be exact; short forms go through the abc rules.
    if lower.len() > 3 && !Mode::ALL.iter().any(|m| m.name() == lower) {
        return None;
    }
    Mode::parse(&lower)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_tag("  Slip   Jig "), "slip jig");
        let t: TagSet = ["Jig", "jig", " ", "6/8"].into_iter().collect();
        assert_eq!(t.len(), 2);
        assert!(t.contains("JIG"));
    }

    #[test]
    fn families() {
        assert_eq!(TagFamily::of("6/8"), TagFamily::Meter);
        assert_eq!(TagFamily::of("dorian"), TagFamily::Mode);
        assert_eq!(TagFamily::of("slip jig"), TagFamily::Type);
        let t: TagSet = ["jig", "dorian", "6/8", "reel"].into_iter().collect();
        assert_eq!(t.family(TagFamily::Type), vec!["jig", "reel"]);
    }

    #[test]
    fn modes_from_keys() {
        assert_eq!(mode_from_key("Ddorian"), Some(Mode::Dorian));
        assert_eq!(mode_from_key("Dmajor"), Some(Mode::Major));
        assert_eq!(mode_from_key("dorian"), Some(Mode::Dorian));
        assert_eq!(mode_from_key("Am"), Some(Mode::Minor));
        assert_eq!(mode_from_key("Amin"), Some(Mode::Minor));
        assert_eq!(mode_from_key("Bbmix"), Some(Mode::Mixolydian));
        assert_eq!(mode_from_key("F#minor"), Some(Mode::Minor));
        assert_eq!(mode_from_key("G"), Some(Mode::Major));
        assert_eq!(mode_from_key("Gmajestic"), None);
        assert_eq!(mode_from_key("Xfoo"), None);
        assert_eq!(mode_from_key(""), None);
    }

    #[test]
    fn serde_is_sorted_list() {
        let t: TagSet = ["reel", "Major", "4/4"].into_iter().collect();
        assert_eq!(serde_json::to_string(&t).unwrap(), r#"["4/4","major","reel"]"#);
        let back: TagSet = serde_json::from_str(r#"["Reel"," 4/4","",  "major"]"#).unwrap();
        assert_eq!(back, t);
    }
}

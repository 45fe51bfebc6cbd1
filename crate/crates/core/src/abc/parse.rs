//! Lenient abc reader.
//!
//! Header fields up to and including `K:` are decoded into [`TuneHeader`];
//! the body is lexed into bars of note, rest and opaque events. Anything the
//! supported subset does not cover becomes an opaque event, so real-world
//! transcriptions always load.

use num_traits::Zero;
use thiserror::Error;

use super::model::{
    Accidental, Bar, Barline, EventKind, Key, KeySignature, Meter, Mode, NoteEvent, NoteLetter,
    OpaqueKind, Pitch, Rational, Tune, TuneHeader,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("input is empty")]
    EmptyInput,
    #[error("no K: field and no note or rest tokens found")]
    NoMusicContent,
}

// Durations beyond this are treated as garbage rather than risking overflow.
const MAX_DURATION_PART: i64 = 1 << 16;

pub fn parse_tune(source: &str) -> Result<Tune, ParseError> {
    let raw = source.replace("\r\n", "\n").replace('\r', "\n");
    if raw.trim().is_empty() {
        return Err(ParseError::EmptyInput);
    }

    let mut header = TuneHeader::default();
    let mut body = BodyBuilder::default();
    let mut in_header = true;
    let mut saw_key = false;

    for line in raw.lines() {
        if in_header {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            if let Some((letter, value)) = field_line(line) {
                if letter == 'K' {
                    saw_key = true;
                    in_header = false;
                }
                apply_header_field(&mut header, letter, value);
                continue;
            }
            in_header = false;
        }

        if line.trim_start().starts_with('%') {
            continue;
        }
        if let Some((letter, value)) = field_line(line).filter(|(l, _)| BODY_FIELDS.contains(*l)) {
            body.push_field_line(letter, value);
        } else {
            body.lex_line(line);
        }
        body.end_line();
    }

    let bars = body.finish();
    let has_timed = bars.iter().any(Bar::has_timed_events);
    if !saw_key && !has_timed {
        return Err(ParseError::NoMusicContent);
    }

    Ok(Tune {
        header,
        body: bars,
        raw,
    })
}

/// Field letters allowed on their own line inside the body.
const BODY_FIELDS: &str = "IKLMmNPQRrsTUVWw";

/// `X:value` style lines. Returns the field letter and the value with any
/// trailing comment removed.
pub(crate) fn field_line(line: &str) -> Option<(char, &str)> {
    let mut chars = line.chars();
    let letter = chars.next()?;
    if !(letter.is_ascii_alphabetic() || letter == '+') || chars.next()? != ':' {
        return None;
    }
    let value = strip_comment(&line[2..]).trim();
    Some((letter, value))
}

fn strip_comment(s: &str) -> &str {
    let bytes = s.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'%' && (i == 0 || bytes[i - 1] != b'\\') {
            return &s[..i];
        }
    }
    s
}

fn apply_header_field(header: &mut TuneHeader, letter: char, value: &str) {
    let extra = |h: &mut TuneHeader| h.extra_fields.push((letter, value.to_string()));
    match letter {
        'X' => match value.parse::<u64>() {
            Ok(n) if header.reference.is_none() => header.reference = Some(n),
            _ => extra(header),
        },
        'T' if header.title.is_none() => header.title = Some(value.to_string()),
        'R' if header.rhythm.is_none() => header.rhythm = Some(value.to_string()),
        // Later M/L/K lines override earlier ones.
        'M' => header.meter = Some(parse_meter(value)),
        'L' => match parse_unit_length(value) {
            Some(l) => header.unit_length = Some(l),
            None => extra(header),
        },
        'K' => header.key = Some(parse_key(value)),
        _ => extra(header),
    }
}

pub fn parse_meter(text: &str) -> Meter {
    let t = text.trim();
    match t {
        "C" => return Meter::Common,
        "C|" => return Meter::Cut,
        _ if t.eq_ignore_ascii_case("none") => return Meter::Free,
        _ => {}
    }
    let other = || Meter::Other {
        text: t.to_string(),
    };
    let Some((num, den)) = t.split_once('/') else {
        return other();
    };
    let numerator: Option<i64> = num
        .split('+')
        .map(|p| p.trim().parse::<i64>().ok().filter(|v| *v > 0 && *v < MAX_DURATION_PART))
        .sum();
    let denominator = den.trim().parse::<i64>().ok();
    match (numerator, denominator) {
        (Some(n), Some(d)) if d > 0 && d < MAX_DURATION_PART && (d as u64).is_power_of_two() => {
            Meter::Fraction {
                numerator: n,
                denominator: d,
            }
        }
        _ => other(),
    }
}

pub fn parse_unit_length(text: &str) -> Option<Rational> {
    let t = text.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim().parse::<i64>().ok()?, d.trim().parse::<i64>().ok()?),
        None => (t.parse::<i64>().ok()?, 1),
    };
    (n > 0 && d > 0 && n < MAX_DURATION_PART && d < MAX_DURATION_PART).then(|| Rational::new(n, d))
}

/// `D`, `Dmajor`, `D major`, `F#m`, `Bbmix`, `G clef=bass`. Values that do not
/// start with an uppercase tonic are kept as [`Key::Other`].
pub fn parse_key(text: &str) -> Key {
    let t = text.trim();
    let mut chars = t.char_indices().peekable();
    let tonic = match chars.next() {
        Some((_, c)) if c.is_ascii_uppercase() => NoteLetter::from_char(c),
        _ => None,
    };
    let Some(tonic) = tonic else {
        return Key::Other(t.to_string());
    };
    let mut rest = &t[1..];
    let accidental = match rest.chars().next() {
        Some('#') => Some(Accidental::Sharp),
        Some('b') => Some(Accidental::Flat),
        _ => None,
    };
    if accidental.is_some() {
        rest = &rest[1..];
    }
    let rest = rest.trim_start();
    let word_end = rest
        .find(|c: char| !c.is_ascii_alphabetic())
        .unwrap_or(rest.len());
    let word = &rest[..word_end];
    let (mode, trailing) = match (word.is_empty(), Mode::parse(word)) {
        (false, Some(mode)) => (mode, rest[word_end..].trim()),
        _ => (Mode::Major, rest.trim()),
    };
    Key::Signature(KeySignature {
        tonic,
        accidental,
        mode,
        trailing: trailing.to_string(),
    })
}

/// Parses a duration suffix at the start of `s`. Returns the multiplier and
/// the number of bytes consumed; `None` for zero or absurd values.
pub(crate) fn parse_duration(s: &str) -> (Option<Rational>, usize) {
    let bytes = s.as_bytes();
    let mut i = 0;
    let digits = |i: &mut usize| -> Option<Option<i64>> {
        let start = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        if *i == start {
            return None;
        }
        Some(s[start..*i].parse::<i64>().ok().filter(|v| *v < MAX_DURATION_PART))
    };
    let mut valid = true;
    let mut numer = 1i64;
    if let Some(n) = digits(&mut i) {
        match n {
            Some(n) => numer = n,
            None => valid = false,
        }
    }
    let mut denom = 1i64;
    while i < bytes.len() && bytes[i] == b'/' {
        i += 1;
        let factor = match digits(&mut i) {
            Some(Some(d)) => d,
            Some(None) => {
                valid = false;
                1
            }
            None => 2,
        };
        denom = denom.saturating_mul(factor);
    }
    if !valid || numer == 0 || denom == 0 || denom >= MAX_DURATION_PART {
        return (None, i);
    }
    (Some(Rational::new(numer, denom)), i)
}

fn classify_barline(run: &str) -> (Barline, Barline) {
    let lead = run.chars().take_while(|&c| c == ':').count();
    if lead == run.len() {
        return (Barline::RepeatEnd, Barline::RepeatStart);
    }
    let trail = run.chars().rev().take_while(|&c| c == ':').count();
    let core = &run[lead..run.len() - trail];
    let close = if lead > 0 {
        Barline::RepeatEnd
    } else if core.contains(']') {
        Barline::Final
    } else if core.contains('[') || core.matches('|').count() >= 2 {
        Barline::Double
    } else {
        Barline::Plain
    };
    let open = if trail > 0 {
        Barline::RepeatStart
    } else {
        Barline::Plain
    };
    (close, open)
}

struct BodyBuilder {
    bars: Vec<Bar>,
    current: Bar,
    pending_space: bool,
    pending_decorations: String,
    decorations_spaced: bool,
}

impl Default for BodyBuilder {
    fn default() -> Self {
        let mut current = Bar::new(Vec::new());
        current.open_barline = Barline::None;
        Self {
            bars: Vec::new(),
            current,
            pending_space: true,
            pending_decorations: String::new(),
            decorations_spaced: false,
        }
    }
}

impl BodyBuilder {
    fn take_space(&mut self) -> bool {
        std::mem::take(&mut self.pending_space)
    }

    fn flush_decorations(&mut self) {
        if !self.pending_decorations.is_empty() {
            let mut ev = NoteEvent::opaque(
                OpaqueKind::Decoration,
                std::mem::take(&mut self.pending_decorations),
            );
            ev.spaced = self.decorations_spaced;
            self.current.events.push(ev);
        }
    }

    fn push_decoration(&mut self, text: &str) {
        if self.pending_decorations.is_empty() {
            self.decorations_spaced = self.take_space();
        }
        self.pending_space = false;
        self.pending_decorations.push_str(text);
    }

    fn push_timed(&mut self, mut ev: NoteEvent) {
        if self.pending_decorations.is_empty() {
            ev.spaced = self.take_space();
        } else {
            ev.spaced = self.decorations_spaced;
            ev.decorations = std::mem::take(&mut self.pending_decorations);
            self.pending_space = false;
        }
        self.current.events.push(ev);
    }

    fn push_opaque(&mut self, kind: OpaqueKind, text: &str) {
        self.flush_decorations();
        let mut ev = NoteEvent::opaque(kind, text);
        ev.spaced = self.take_space();
        self.current.events.push(ev);
    }

    fn barline(&mut self, close: Barline, open: Barline) {
        self.flush_decorations();
        self.pending_space = false;
        let empty = self.current.events.is_empty() && self.current.ending.is_none();
        if empty {
            // Adjacent barlines (`:|` then `|:` on the next line) merge.
            if let Some(prev) = self.bars.last_mut() {
                if close != Barline::Plain {
                    prev.close_barline = close;
                }
            }
            if open != Barline::Plain || self.current.open_barline == Barline::None {
                self.current.open_barline = open;
            }
            return;
        }
        let mut next = Bar::new(Vec::new());
        next.open_barline = open;
        let mut done = std::mem::replace(&mut self.current, next);
        done.close_barline = close;
        self.push_bar(done);
    }

    fn end_line(&mut self) {
        self.flush_decorations();
        if self.current.events.is_empty() && self.current.ending.is_none() {
            if let Some(prev) = self.bars.last_mut() {
                prev.line_break = true;
            }
        }
        self.pending_space = true;
    }

    fn push_field_line(&mut self, letter: char, value: &str) {
        self.push_opaque(OpaqueKind::InlineField, &format!("[{letter}:{value}]"));
    }

    fn finish(mut self) -> Vec<Bar> {
        self.flush_decorations();
        if !self.current.events.is_empty() || self.current.ending.is_some() {
            let mut last = std::mem::replace(&mut self.current, Bar::new(Vec::new()));
            last.close_barline = Barline::None;
            self.push_bar(last);
        }
        self.bars
    }

    fn push_bar(&mut self, mut bar: Bar) {
        // A barline already breaks the beam, so leading whitespace means nothing.
        if let Some(first) = bar.events.first_mut() {
            first.spaced = false;
        }
        self.bars.push(bar);
    }

    fn lex_line(&mut self, line: &str) {
        let line = strip_comment(line);
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = line[i..].chars().next().unwrap_or(' ');
            let clen = c.len_utf8();
            match c {
                ' ' | '\t' => {
                    self.pending_space = true;
                    i += 1;
                }
                '\\' | '`' => i += 1,
                '|' => i = self.lex_barline(line, i),
                ':' if matches!(bytes.get(i + 1), Some(b'|') | Some(b':')) => {
                    i = self.lex_barline(line, i)
                }
                '[' => i = self.lex_bracket(line, i),
                '"' => i = self.lex_delimited(line, i, '"', OpaqueKind::Annotation),
                '{' => i = self.lex_delimited(line, i, '}', OpaqueKind::GraceNotes),
                '!' | '+' => match line[i + 1..].find(c) {
                    Some(end) => {
                        let text = &line[i..i + 1 + end + 1];
                        self.push_decoration(text);
                        i += text.len();
                    }
                    None => {
                        self.push_opaque(OpaqueKind::Unknown, &line[i..i + 1]);
                        i += 1;
                    }
                },
                '.' | '~' | 'H' | 'L' | 'M' | 'O' | 'P' | 'S' | 'T' | 'u' | 'v' => {
                    self.push_decoration(&line[i..i + 1]);
                    i += 1;
                }
                '(' => {
                    if bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                        // (p, (p:q, (p:q:r, (p::r
                        let digits_from = |mut k: usize| {
                            while k < bytes.len() && bytes[k].is_ascii_digit() {
                                k += 1;
                            }
                            k
                        };
                        let mut j = digits_from(i + 1);
                        while bytes.get(j) == Some(&b':') {
                            let colons = bytes[j..].iter().take_while(|&&b| b == b':').count();
                            if !bytes.get(j + colons).is_some_and(u8::is_ascii_digit) {
                                break;
                            }
                            j = digits_from(j + colons);
                        }
                        self.push_opaque(OpaqueKind::Tuplet, &line[i..j]);
                        i = j;
                    } else {
                        self.push_opaque(OpaqueKind::Slur, "(");
                        i += 1;
                    }
                }
                ')' => {
                    self.push_opaque(OpaqueKind::Slur, ")");
                    i += 1;
                }
                '>' | '<' => {
                    let j = i + line[i..].chars().take_while(|&x| x == c).count();
                    self.push_opaque(OpaqueKind::BrokenRhythm, &line[i..j]);
                    i = j;
                }
                'Z' | 'X' => {
                    let mut j = i + 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    self.push_opaque(OpaqueKind::BarRest, &line[i..j]);
                    i = j;
                }
                'y' | '$' | '-' => {
                    self.push_opaque(OpaqueKind::Spacer, &line[i..i + 1]);
                    i += 1;
                }
                'z' | 'x' => {
                    let (dur, used) = parse_duration(&line[i + 1..]);
                    let end = i + 1 + used;
                    match dur {
                        Some(d) => {
                            let mut ev = NoteEvent::rest(d);
                            ev.kind = EventKind::Rest {
                                invisible: c == 'x',
                            };
                            self.push_timed(ev);
                        }
                        None => self.push_opaque(OpaqueKind::Unknown, &line[i..end]),
                    }
                    i = end;
                }
                '^' | '_' | '=' | 'A'..='G' | 'a'..='g' => i = self.lex_note(line, i),
                _ => {
                    self.push_opaque(OpaqueKind::Unknown, &line[i..i + clen]);
                    i += clen;
                }
            }
        }
    }

    fn lex_note(&mut self, line: &str, start: usize) -> usize {
        let bytes = line.as_bytes();
        let mut i = start;
        let accidental = if line[i..].starts_with("^^") {
            i += 2;
            Some(Accidental::DoubleSharp)
        } else if line[i..].starts_with("__") {
            i += 2;
            Some(Accidental::DoubleFlat)
        } else {
            match bytes[i] {
                b'^' => {
                    i += 1;
                    Some(Accidental::Sharp)
                }
                b'_' => {
                    i += 1;
                    Some(Accidental::Flat)
                }
                b'=' => {
                    i += 1;
                    Some(Accidental::Natural)
                }
                _ => None,
            }
        };
        let Some(letter_byte) = bytes.get(i).copied().filter(|b| {
            matches!(b, b'A'..=b'G' | b'a'..=b'g')
        }) else {
            self.push_opaque(OpaqueKind::Unknown, &line[start..i]);
            return i;
        };
        let letter = NoteLetter::from_char(letter_byte as char).expect("matched A-G");
        let mut octave_shift = i32::from(letter_byte.is_ascii_lowercase());
        i += 1;
        while let Some(&b) = bytes.get(i) {
            match b {
                b'\'' => octave_shift += 1,
                b',' => octave_shift -= 1,
                _ => break,
            }
            i += 1;
        }
        let (dur, used) = parse_duration(&line[i..]);
        i += used;
        let Some(duration) = dur else {
            self.push_opaque(OpaqueKind::Unknown, &line[start..i]);
            return i;
        };
        let mut ev = NoteEvent::note(
            Pitch {
                letter,
                accidental,
                octave_shift,
            },
            duration,
        );
        if bytes.get(i) == Some(&b'-') {
            ev.tied = true;
            i += 1;
        }
        self.push_timed(ev);
        i
    }

    fn lex_barline(&mut self, line: &str, start: usize) -> usize {
        let bytes = line.as_bytes();
        let mut i = start;
        if bytes[i] == b'[' {
            i += 1;
        }
        while i < bytes.len() && matches!(bytes[i], b'|' | b':' | b']') {
            i += 1;
        }
        let (close, open) = classify_barline(&line[start..i]);
        self.barline(close, open);
        let end = i + ending_len(&line[i..]);
        if end > i {
            self.current.ending = Some(line[i..end].to_string());
        }
        end
    }

    fn lex_bracket(&mut self, line: &str, start: usize) -> usize {
        let bytes = line.as_bytes();
        match bytes.get(start + 1) {
            Some(b'|') => self.lex_barline(line, start),
            Some(b) if b.is_ascii_digit() && self.current.events.is_empty() => {
                let end = start + 1 + ending_len(&line[start + 1..]);
                self.flush_decorations();
                self.pending_space = false;
                self.current.ending = Some(line[start + 1..end].to_string());
                end
            }
            Some(b) if b.is_ascii_alphabetic() && bytes.get(start + 2) == Some(&b':') => {
                self.lex_delimited(line, start, ']', OpaqueKind::InlineField)
            }
            _ => {
                // Chord: contents plus an optional duration and tie.
                let Some(close) = line[start + 1..].find(']') else {
                    self.push_opaque(OpaqueKind::Unknown, "[");
                    return start + 1;
                };
                let mut end = start + 1 + close + 1;
                end += parse_duration(&line[end..]).1;
                if bytes.get(end) == Some(&b'-') {
                    end += 1;
                }
                self.push_opaque(OpaqueKind::Chord, &line[start..end]);
                end
            }
        }
    }

    fn lex_delimited(&mut self, line: &str, start: usize, close: char, kind: OpaqueKind) -> usize {
        match line[start + 1..].find(close) {
            Some(off) => {
                let end = start + 1 + off + close.len_utf8();
                self.push_opaque(kind, &line[start..end]);
                end
            }
            None => {
                self.push_opaque(OpaqueKind::Unknown, &line[start..]);
                line.len()
            }
        }
    }
}

fn ending_len(s: &str) -> usize {
    let bytes = s.as_bytes();
    if !bytes.first().is_some_and(u8::is_ascii_digit) {
        return 0;
    }
    bytes
        .iter()
        .take_while(|b| b.is_ascii_digit() || matches!(b, b',' | b'-'))
        .count()
}

impl Tune {
    /// Convenience for tests and fixtures.
    pub fn parse(source: &str) -> Result<Tune, ParseError> {
        parse_tune(source)
    }

    /// True when any bar holds a note or rest with a non-zero duration.
    pub fn has_music(&self) -> bool {
        self.events().any(|e| e.is_timed() && !e.duration.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abc::model::bar_fill;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn timed_count(bar: &Bar) -> usize {
        bar.events.iter().filter(|e| e.is_timed()).count()
    }

    #[test]
    fn irish_jig_header_and_pickup() {
        let t = parse_tune("X:1\nT:An Irish Lively Jig\nM:6/8\nK:Dmajor\nA|dAF DAF|").unwrap();
        assert_eq!(t.header.reference, Some(1));
        assert_eq!(t.header.title.as_deref(), Some("An Irish Lively Jig"));
        assert_eq!(t.header.meter.as_ref().unwrap().value(), Some(r(6, 8)));
        let key = t.header.key_signature().unwrap();
        assert_eq!((key.tonic, key.mode), (NoteLetter::D, Mode::Major));
        assert_eq!(t.body.len(), 2);
        assert_eq!(t.body[0].open_barline, Barline::None);
        assert_eq!(timed_count(&t.body[0]), 1);
        assert_eq!(timed_count(&t.body[1]), 6);
        let letters: String = t.body[1]
            .events
            .iter()
            .map(|e| match &e.kind {
                EventKind::Note { pitch } => pitch.to_string(),
                _ => "?".into(),
            })
            .collect();
        assert_eq!(letters, "dAFDAF");
    }

    #[test]
    fn minimal_rest_tune() {
        let t = parse_tune("K:C\nz|").unwrap();
        assert_eq!(t.body.len(), 1);
        assert_eq!(t.body[0].events.len(), 1);
        assert_eq!(t.body[0].events[0].kind, EventKind::Rest { invisible: false });
        assert_eq!(t.body[0].events[0].duration, r(1, 1));
    }

    #[test]
    fn key_spellings_agree() {
        for k in ["Dmajor", "D", "D major", "Dmaj", "D Major"] {
            match parse_key(k) {
                Key::Signature(sig) => {
                    assert_eq!(sig.tonic, NoteLetter::D, "{k}");
                    assert_eq!(sig.mode, Mode::Major, "{k}");
                    assert!(sig.trailing.is_empty(), "{k}");
                }
                other => panic!("{k}: {other:?}"),
            }
        }
        let Key::Signature(sig) = parse_key("F#m") else { panic!() };
        assert_eq!((sig.accidental, sig.mode), (Some(Accidental::Sharp), Mode::Minor));
        let Key::Signature(sig) = parse_key("Bbmix") else { panic!() };
        assert_eq!((sig.accidental, sig.mode), (Some(Accidental::Flat), Mode::Mixolydian));
        let Key::Signature(sig) = parse_key("G clef=bass") else { panic!() };
        assert_eq!((sig.mode, sig.trailing.as_str()), (Mode::Major, "clef=bass"));
        assert_eq!(parse_key("none"), Key::Other("none".into()));
    }

    #[test]
    fn meters() {
        assert_eq!(parse_meter("C").value(), Some(r(1, 1)));
        assert_eq!(parse_meter("C|").value(), Some(r(1, 1)));
        assert_eq!(parse_meter("C|"), Meter::Cut);
        assert_eq!(parse_meter("2+3/8").value(), Some(r(5, 8)));
        assert_eq!(parse_meter("none"), Meter::Free);
        assert!(matches!(parse_meter("3/5"), Meter::Other { .. }));
        assert!(matches!(parse_meter("0/4"), Meter::Other { .. }));
    }

    #[test]
    fn durations() {
        assert_eq!(parse_duration(""), (Some(r(1, 1)), 0));
        assert_eq!(parse_duration("2"), (Some(r(2, 1)), 1));
        assert_eq!(parse_duration("/"), (Some(r(1, 2)), 1));
        assert_eq!(parse_duration("//"), (Some(r(1, 4)), 2));
        assert_eq!(parse_duration("/2"), (Some(r(1, 2)), 2));
        assert_eq!(parse_duration("3/2"), (Some(r(3, 2)), 3));
        assert_eq!(parse_duration("0").0, None);
        assert_eq!(parse_duration("99999999999").0, None);
    }

    #[test]
    fn barline_kinds() {
        let t = parse_tune("K:G\n|:GAB|1 cde:|2 dcB||efg|]").unwrap();
        assert_eq!(t.body.len(), 4);
        assert_eq!(t.body[0].open_barline, Barline::RepeatStart);
        assert_eq!(t.body[1].ending.as_deref(), Some("1"));
        assert_eq!(t.body[1].close_barline, Barline::RepeatEnd);
        assert_eq!(t.body[2].ending.as_deref(), Some("2"));
        assert_eq!(t.body[2].close_barline, Barline::Double);
        assert_eq!(t.body[3].close_barline, Barline::Final);
    }

    #[test]
    fn repeat_marks_across_lines_merge() {
        let t = parse_tune("K:G\nGAB cde:|\n|:def gab:|").unwrap();
        assert_eq!(t.body.len(), 2);
        assert_eq!(t.body[0].close_barline, Barline::RepeatEnd);
        assert!(t.body[0].line_break);
        assert_eq!(t.body[1].open_barline, Barline::RepeatStart);
        let t = parse_tune("K:G\nGAB::cde").unwrap();
        assert_eq!(t.body[0].close_barline, Barline::RepeatEnd);
        assert_eq!(t.body[1].open_barline, Barline::RepeatStart);
    }

    #[test]
    fn opaque_constructs_do_not_fill() {
        let t = parse_tune("M:4/4\nK:D\n\"D\"{g}[DF]2 (3ABA !trill!d2 ~e>f|").unwrap();
        let bar = &t.body[0];
        let kinds: Vec<_> = bar.events.iter().filter_map(NoteEvent::opaque_kind).collect();
        assert_eq!(
            kinds,
            vec![
                OpaqueKind::Annotation,
                OpaqueKind::GraceNotes,
                OpaqueKind::Chord,
                OpaqueKind::Tuplet,
                OpaqueKind::BrokenRhythm
            ]
        );
        let d = bar
            .events
            .iter()
            .find(|e| e.decorations == "!trill!")
            .expect("decoration attaches to the following note");
        assert_eq!(d.duration, r(2, 1));
        // A B A d2 e f = 7 units of 1/8
        assert_eq!(bar_fill(bar, r(1, 8)), r(7, 8));
    }

    #[test]
    fn comments_and_continuations() {
        let t = parse_tune("X:1 % ref\nK:D % key\n% whole line\nABc|\\\ndef|").unwrap();
        assert_eq!(t.header.reference, Some(1));
        assert_eq!(t.body.len(), 2);
    }

    #[test]
    fn body_fields_become_inline() {
        let t = parse_tune("M:6/8\nK:D\nABc|\nM:3/4\nd2e|").unwrap();
        assert!(t
            .events()
            .any(|e| e.opaque_kind() == Some(OpaqueKind::InlineField)));
    }

    #[test]
    fn errors() {
        assert_eq!(parse_tune(""), Err(ParseError::EmptyInput));
        assert_eq!(parse_tune(" \n\t\n"), Err(ParseError::EmptyInput));
        assert_eq!(parse_tune("T:Only a title"), Err(ParseError::NoMusicContent));
        assert_eq!(parse_tune("hijk lmn"), Err(ParseError::NoMusicContent));
        assert!(parse_tune("K:D").is_ok());
        assert!(parse_tune("abc|").is_ok());
    }

    #[test]
    fn unknown_characters_are_kept() {
        let t = parse_tune("K:C\nAB # c|").unwrap();
        assert!(t.events().any(|e| matches!(
            &e.kind,
            EventKind::Opaque { kind: OpaqueKind::Unknown, text } if text == "#"
        )));
    }

    #[test]
    fn line_endings_normalised() {
        let t = parse_tune("K:C\r\nABc|\r\n").unwrap();
        assert!(!t.raw.contains('\r'));
    }
}

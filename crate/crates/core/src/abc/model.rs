use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Exact duration arithmetic. Every note length, bar fill and meter is one of these.
pub type Rational = num_rational::Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NoteLetter {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl NoteLetter {
    pub fn from_char(c: char) -> Option<Self> {
        Some(match c.to_ascii_uppercase() {
            'A' => Self::A,
            'B' => Self::B,
            'C' => Self::C,
            'D' => Self::D,
            'E' => Self::E,
            'F' => Self::F,
            'G' => Self::G,
            _ => return None,
        })
    }

    pub fn as_upper(self) -> char {
        match self {
            Self::A => 'A',
            Self::B => 'B',
            Self::C => 'C',
            Self::D => 'D',
            Self::E => 'E',
            Self::F => 'F',
            Self::G => 'G',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accidental {
    Sharp,
    Flat,
    Natural,
    DoubleSharp,
    DoubleFlat,
}

impl Accidental {
    /// Prefix spelling used in note tokens (`^`, `_`, `=`, `^^`, `__`).
    pub fn abc_prefix(self) -> &'static str {
        match self {
            Self::Sharp => "^",
            Self::Flat => "_",
            Self::Natural => "=",
            Self::DoubleSharp => "^^",
            Self::DoubleFlat => "__",
        }
    }
}

/// A pitched note. Case is folded into `octave_shift`: `C` is 0, `c` is 1,
/// `c'` is 2 and `C,` is -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pitch {
    pub letter: NoteLetter,
    pub accidental: Option<Accidental>,
    pub octave_shift: i32,
}

impl fmt::Display for Pitch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(acc) = self.accidental {
            f.write_str(acc.abc_prefix())?;
        }
        let upper = self.letter.as_upper();
        if self.octave_shift >= 1 {
            write!(f, "{}", upper.to_ascii_lowercase())?;
            for _ in 1..self.octave_shift {
                f.write_str("'")?;
            }
        } else {
            write!(f, "{upper}")?;
            for _ in self.octave_shift..0 {
                f.write_str(",")?;
            }
        }
        Ok(())
    }
}

/// What an opaque (unmeasured) event stands for. The classification drives
/// validation: some opaque constructs hide real duration and make bar
/// arithmetic untrustworthy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpaqueKind {
    /// `[CEG]2`
    Chord,
    /// `{ag}`
    GraceNotes,
    /// `(3`, `(3:2:3`
    Tuplet,
    /// `"Am"`, `"^text"`
    Annotation,
    /// `!trill!`, `~`, `.` not attached to a following note
    Decoration,
    /// `(` and `)`
    Slur,
    /// `>`, `<<`
    BrokenRhythm,
    /// `[M:3/4]` or a field line inside the body
    InlineField,
    /// `Z`, `Z4`, `X`
    BarRest,
    /// `y`, `` ` ``, standalone `-`
    Spacer,
    /// Anything the lexer does not understand.
    Unknown,
}

impl OpaqueKind {
    /// True when the construct carries musical time that the fill arithmetic cannot see.
    pub fn hides_duration(self) -> bool {
        matches!(self, Self::Chord | Self::Tuplet | Self::BarRest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Note { pitch: Pitch },
    Rest { invisible: bool },
    Opaque { kind: OpaqueKind, text: String },
}

/// One timed or untimed item inside a bar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub kind: EventKind,
    /// Multiple of the unit note length. Zero for opaque events.
    pub duration: Rational,
    /// Decoration text written directly before a note or rest (`~`, `!roll!`).
    pub decorations: String,
    /// Trailing `-`.
    pub tied: bool,
    /// Whitespace preceded this event in the source (beam break).
    pub spaced: bool,
}

impl NoteEvent {
    pub fn note(pitch: Pitch, duration: Rational) -> Self {
        Self {
            kind: EventKind::Note { pitch },
            duration,
            decorations: String::new(),
            tied: false,
            spaced: false,
        }
    }

    pub fn rest(duration: Rational) -> Self {
        Self {
            kind: EventKind::Rest { invisible: false },
            duration,
            decorations: String::new(),
            tied: false,
            spaced: false,
        }
    }

    pub fn opaque(kind: OpaqueKind, text: impl Into<String>) -> Self {
        Self {
            kind: EventKind::Opaque {
                kind,
                text: text.into(),
            },
            duration: Rational::zero(),
            decorations: String::new(),
            tied: false,
            spaced: false,
        }
    }

    pub fn is_timed(&self) -> bool {
        !matches!(self.kind, EventKind::Opaque { .. })
    }

    pub fn opaque_kind(&self) -> Option<OpaqueKind> {
        match &self.kind {
            EventKind::Opaque { kind, .. } => Some(*kind),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Barline {
    Plain,
    RepeatStart,
    RepeatEnd,
    Double,
    Final,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bar {
    pub events: Vec<NoteEvent>,
    pub open_barline: Barline,
    pub close_barline: Barline,
    /// Variant ending label (`1`, `2`, `1,3`) written as `|1` or `[2`.
    pub ending: Option<String>,
    /// The source broke the line after this bar.
    pub line_break: bool,
}

impl Bar {
    pub fn new(events: Vec<NoteEvent>) -> Self {
        Self {
            events,
            open_barline: Barline::Plain,
            close_barline: Barline::Plain,
            ending: None,
            line_break: false,
        }
    }

    pub fn has_timed_events(&self) -> bool {
        self.events.iter().any(NoteEvent::is_timed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Major,
    Minor,
    Dorian,
    Phrygian,
    Lydian,
    Mixolydian,
    Aeolian,
    Locrian,
    Ionian,
}

impl Mode {
    pub const ALL: [Mode; 9] = [
        Mode::Major,
        Mode::Minor,
        Mode::Dorian,
        Mode::Phrygian,
        Mode::Lydian,
        Mode::Mixolydian,
        Mode::Aeolian,
        Mode::Locrian,
        Mode::Ionian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Major => "major",
            Self::Minor => "minor",
            Self::Dorian => "dorian",
            Self::Phrygian => "phrygian",
            Self::Lydian => "lydian",
            Self::Mixolydian => "mixolydian",
            Self::Aeolian => "aeolian",
            Self::Locrian => "locrian",
            Self::Ionian => "ionian",
        }
    }

    /// Three-letter spelling used in canonical `K:` lines.
    pub fn abbreviation(self) -> &'static str {
        &self.name()[..3]
    }

    /// Accepts mode words and `m`, case-insensitively.
    /// The empty string means major.
    pub fn parse(word: &str) -> Option<Self> {
        let w = word.trim().to_ascii_lowercase();
        if w.is_empty() {
            return Some(Self::Major);
        }
        if w == "m" {
            return Some(Self::Minor);
        }
        if w.len() < 3 {
            return None;
        }
        // Only the first three letters are significant.
        Self::ALL.into_iter().find(|m| m.abbreviation() == &w[..3])
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeySignature {
    pub tonic: NoteLetter,
    pub accidental: Option<Accidental>,
    pub mode: Mode,
    /// Anything after the mode (clef and transposition directives), kept verbatim.
    pub trailing: String,
}

impl KeySignature {
    pub fn tonic_name(&self) -> String {
        let mut s = self.tonic.as_upper().to_string();
        match self.accidental {
            Some(Accidental::Sharp) => s.push('#'),
            Some(Accidental::Flat) => s.push('b'),
            _ => {}
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Key {
    Signature(KeySignature),
    /// `K:none`, `K:HP` and other values outside the supported subset.
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Meter {
    Fraction { numerator: i64, denominator: i64 },
    /// `C`, i.e. 4/4.
    Common,
    /// `C|`, i.e. 2/2.
    Cut,
    /// `M:none`
    Free,
    /// A value that is not a power-of-two fraction; kept for round trips.
    Other { text: String },
}

impl Meter {
    /// Bar length in whole notes, if the meter is measurable.
    pub fn value(&self) -> Option<Rational> {
        match self {
            Self::Fraction {
                numerator,
                denominator,
            } => Some(Rational::new(*numerator, *denominator)),
            Self::Common => Some(Rational::new(4, 4)),
            Self::Cut => Some(Rational::new(2, 2)),
            Self::Free | Self::Other { .. } => None,
        }
    }

    /// Fraction spelling of a measurable meter, without reducing (`6/8`, not `3/4`).
    pub fn fraction_text(&self) -> Option<String> {
        match self {
            Self::Fraction {
                numerator,
                denominator,
            } => Some(format!("{numerator}/{denominator}")),
            Self::Common => Some("4/4".into()),
            Self::Cut => Some("2/2".into()),
            Self::Free | Self::Other { .. } => None,
        }
    }
}

impl fmt::Display for Meter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fraction {
                numerator,
                denominator,
            } => write!(f, "{numerator}/{denominator}"),
            Self::Common => f.write_str("C"),
            Self::Cut => f.write_str("C|"),
            Self::Free => f.write_str("none"),
            Self::Other { text } => f.write_str(text),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuneHeader {
    pub reference: Option<u64>,
    pub title: Option<String>,
    pub rhythm: Option<String>,
    pub meter: Option<Meter>,
    pub unit_length: Option<Rational>,
    pub key: Option<Key>,
    /// Unrecognised or repeated header fields in source order.
    pub extra_fields: Vec<(char, String)>,
}

impl TuneHeader {
    /// `L:` if given, otherwise 1/8 for meters of 3/4 and above and 1/16 below.
    /// Tunes without a measurable meter default to 1/8.
    pub fn effective_unit_length(&self) -> Rational {
        if let Some(l) = self.unit_length {
            return l;
        }
        match self.meter.as_ref().and_then(Meter::value) {
            Some(m) if m < Rational::new(3, 4) => Rational::new(1, 16),
            _ => Rational::new(1, 8),
        }
    }

    pub fn key_signature(&self) -> Option<&KeySignature> {
        match &self.key {
            Some(Key::Signature(k)) => Some(k),
            _ => None,
        }
    }
}

/// A parsed tune. `raw` is the source with line endings normalised; it does
/// not take part in structural comparisons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tune {
    pub header: TuneHeader,
    pub body: Vec<Bar>,
    pub raw: String,
}

impl Tune {
    /// Header and body equality, ignoring the source text.
    pub fn same_structure(&self, other: &Tune) -> bool {
        self.header == other.header && self.body == other.body
    }

    pub fn unit_length(&self) -> Rational {
        self.header.effective_unit_length()
    }

    pub fn events(&self) -> impl Iterator<Item = &NoteEvent> {
        self.body.iter().flat_map(|b| b.events.iter())
    }
}

/// Sum of event durations scaled by the unit length. Opaque events contribute nothing.
pub fn bar_fill(bar: &Bar, unit_length: Rational) -> Rational {
    events_fill(&bar.events, unit_length)
}

pub fn events_fill(events: &[NoteEvent], unit_length: Rational) -> Rational {
    events
        .iter()
        .filter(|e| e.is_timed())
        .fold(Rational::zero(), |acc, e| acc + e.duration)
        * unit_length
}

/// `""` for 1, `"2"`, `"/2"`, `"3/2"`.
pub fn duration_suffix(d: Rational) -> String {
    let (n, den) = (*d.numer(), *d.denom());
    if d.is_one() {
        String::new()
    } else if den == 1 {
        n.to_string()
    } else if n == 1 {
        format!("/{den}")
    } else {
        format!("{n}/{den}")
    }
}

//! A practical subset of abc notation 2.1: parsing, bar arithmetic,
//! validation, serialization and the canonical form used for copy detection.

mod model;
mod parse;
mod validate;
mod write;

pub use model::{
    bar_fill, duration_suffix, events_fill, Accidental, Bar, Barline, EventKind, Key,
    KeySignature, Meter, Mode, NoteEvent, NoteLetter, OpaqueKind, Pitch, Rational, Tune,
    TuneHeader,
};
pub use parse::{parse_key, parse_meter, parse_tune, parse_unit_length, ParseError};
pub use validate::{validate, IssueCode, Severity, ValidationIssue};
pub use write::{normalize, serialize};

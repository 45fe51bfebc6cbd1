//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use folkrag::corpus::{ingest, CorpusIndex, FieldMapping};
use proptest::prelude::*;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// The three-entry corpus E1 {jig, dorian, 6/8}, E2 {reel, major, 4/4},
/// E3 {jig, 6/8}.
pub fn fixture_index() -> CorpusIndex {
    let mapping = FieldMapping::from_toml(&std::fs::read_to_string(fixture("mapping.toml")).unwrap()).unwrap();
    let dump = std::fs::File::open(fixture("corpus.jsonl")).unwrap();
    ingest(std::io::BufReader::new(dump), &mapping).unwrap().0
}

/// Random abc tunes: a header with varied meters and keys, then bars of
/// notes, rests, opaque constructs and assorted barlines.
fn note_token() -> impl Strategy<Value = String> {
    (
        prop::sample::select(vec!["", "^", "_", "=", "^^", "__"]),
        prop::sample::select(vec!['A', 'B', 'C', 'D', 'E', 'F', 'G', 'a', 'b', 'c', 'd', 'e', 'f', 'g']),
        prop::sample::select(vec!["", "'", "''", ",", ",,"]),
        prop::sample::select(vec!["", "2", "3", "/", "//", "/2", "3/2", "/4", "4", "6"]),
        prop::sample::select(vec!["", "", "", "-"]),
        prop::sample::select(vec!["", "", "", "~", "!trill!", ".", "+fermata+"]),
    )
        .prop_map(|(acc, letter, oct, dur, tie, deco)| format!("{deco}{acc}{letter}{oct}{dur}{tie}"))
}

fn token() -> impl Strategy<Value = String> {
    prop_oneof![
        8 => note_token(),
        1 => prop::sample::select(vec!["z", "z2", "z/", "x", "x3/2"]).prop_map(String::from),
        1 => prop::sample::select(vec![
            "[CEG]", "[DF]2", "{g}", "{ag}", "\"Am\"", "\"^ha\"", "(3", "(", ")", ">", "<", "y",
            "Z", "Z2", "[K:G]", "#", "&", "*",
        ])
        .prop_map(String::from),
    ]
}

fn separator() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["", "", " ", " ", "  "]).prop_map(String::from)
}

fn barline() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "|", "|", "|", "||", "|]", "|:", ":|", "::", ":|:", "[|", "|1", ":|2", "|\n", ":|\n|:", "|\n",
    ])
    .prop_map(String::from)
}

pub fn bar_text() -> impl Strategy<Value = String> {
    prop::collection::vec((token(), separator()), 0..8).prop_map(|tokens| {
        tokens
            .into_iter()
            .map(|(t, s)| format!("{t}{s}"))
            .collect::<String>()
    })
}

fn header() -> impl Strategy<Value = String> {
    (
        prop::option::of(1u32..500),
        prop::option::of(prop::sample::select(vec!["A Tune", "The Kesh", "Polka"])),
        prop::sample::select(vec!["6/8", "4/4", "2/4", "3/4", "9/8", "C", "C|", "none", "5/3"]),
        prop::option::of(prop::sample::select(vec!["1/8", "1/16", "1/4"])),
        prop::sample::select(vec![
            "D", "Dmajor", "D major", "Ador", "Em", "F#m", "Bbmix", "G clef=treble", "none", "Gdorian",
        ]),
    )
        .prop_map(|(x, t, m, l, k)| {
            let mut h = String::new();
            if let Some(x) = x {
                h.push_str(&format!("X:{x}\n"));
            }
            if let Some(t) = t {
                h.push_str(&format!("T:{t}\n"));
            }
            h.push_str(&format!("M:{m}\n"));
            if let Some(l) = l {
                h.push_str(&format!("L:{l}\n"));
            }
            h.push_str(&format!("K:{k}\n"));
            h
        })
}

pub fn tune_text() -> impl Strategy<Value = String> {
    (
        header(),
        prop::option::of(prop::sample::select(vec!["|", "|:"])),
        prop::collection::vec((bar_text(), barline()), 1..10),
    )
        .prop_map(|(h, lead, bars)| {
            let mut s = h;
            if let Some(l) = lead {
                s.push_str(l);
            }
            for (b, bl) in bars {
                s.push_str(&b);
                s.push_str(&bl);
            }
            s
        })
}


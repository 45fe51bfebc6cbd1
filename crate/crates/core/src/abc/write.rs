use std::fmt::Write as _;

use super::parse::field_line;
use super::model::{duration_suffix, Bar, Barline, EventKind, Key, NoteEvent, Tune};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Style {
    /// Keeps beaming whitespace and line breaks.
    Source,
    /// One line, no whitespace.
    Canonical,
}

/// Writes a tune back to abc text. Re-parsing the output yields a tune with
/// the same structure.
pub fn serialize(tune: &Tune) -> String {
    let h = &tune.header;
    let mut out = String::new();
    if let Some(x) = h.reference {
        let _ = writeln!(out, "X:{x}");
    }
    if let Some(t) = &h.title {
        let _ = writeln!(out, "T:{t}");
    }
    if let Some(r) = &h.rhythm {
        let _ = writeln!(out, "R:{r}");
    }
    for (letter, value) in &h.extra_fields {
        let _ = writeln!(out, "{letter}:{value}");
    }
    if let Some(m) = &h.meter {
        let _ = writeln!(out, "M:{m}");
    }
    if let Some(l) = h.unit_length {
        let _ = writeln!(out, "L:{}/{}", l.numer(), l.denom());
    }
    if let Some(k) = &h.key {
        let _ = writeln!(out, "K:{}", key_text(k, true));
    }
    let mut body = String::new();
    write_body(&mut body, &tune.body, Style::Source);
    for line in body.lines() {
        // Keep music lines such as `T:|` from reading as field lines.
        if field_line(line).is_some() {
            out.push(' ');
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// Canonical text used for exact-copy detection: no reference number or
/// title, header reduced to `M`, `L` (always explicit) and `K`, body on a
/// single line without whitespace.
pub fn normalize(tune: &Tune) -> String {
    let h = &tune.header;
    let mut out = String::new();
    if let Some(m) = &h.meter {
        let text = m.fraction_text().unwrap_or_else(|| m.to_string());
        let _ = writeln!(out, "M:{text}");
    }
    let l = h.effective_unit_length();
    let _ = writeln!(out, "L:{}/{}", l.numer(), l.denom());
    if let Some(k) = &h.key {
        let _ = writeln!(out, "K:{}", key_text(k, false));
    }
    let mut body = String::new();
    write_body(&mut body, &tune.body, Style::Canonical);
    if field_line(&body).is_some() {
        out.push(' ');
    }
    out.push_str(&body);
    out.push('\n');
    out
}

fn key_text(key: &Key, with_trailing: bool) -> String {
    match key {
        Key::Signature(sig) => {
            let mut s = format!("{}{}", sig.tonic_name(), sig.mode.abbreviation());
            if with_trailing && !sig.trailing.is_empty() {
                s.push(' ');
                s.push_str(&sig.trailing);
            }
            s
        }
        Key::Other(text) => text.clone(),
    }
}

fn close_token(close: Barline) -> &'static str {
    match close {
        Barline::Plain => "|",
        Barline::RepeatEnd => ":|",
        Barline::Double => "||",
        Barline::Final => "|]",
        Barline::RepeatStart | Barline::None => "",
    }
}

fn barline_token(close: Barline, next_open: Option<Barline>) -> String {
    let mut s = close_token(close).to_string();
    if next_open == Some(Barline::RepeatStart) {
        if s.is_empty() {
            s.push('|');
        }
        s.push(':');
    }
    s
}

fn write_event(out: &mut String, ev: &NoteEvent) {
    match &ev.kind {
        EventKind::Note { pitch } => {
            let _ = write!(out, "{}{}{}", ev.decorations, pitch, duration_suffix(ev.duration));
        }
        EventKind::Rest { invisible } => {
            let c = if *invisible { 'x' } else { 'z' };
            let _ = write!(out, "{}{}{}", ev.decorations, c, duration_suffix(ev.duration));
        }
        EventKind::Opaque { text, .. } => out.push_str(text),
    }
    if ev.tied {
        out.push('-');
    }
}

fn write_body(out: &mut String, bars: &[Bar], style: Style) {
    for (i, bar) in bars.iter().enumerate() {
        if i == 0 {
            match bar.open_barline {
                Barline::RepeatStart => out.push_str("|:"),
                Barline::None => {}
                _ => out.push('|'),
            }
        }
        if let Some(ending) = &bar.ending {
            if out.is_empty() || out.ends_with('\n') {
                out.push('[');
            }
            out.push_str(ending);
        }
        for ev in &bar.events {
            if style == Style::Source && ev.spaced && !out.is_empty() && !out.ends_with('\n') {
                out.push(' ');
            }
            write_event(out, ev);
        }
        let next_open = bars.get(i + 1).map(|b| b.open_barline);
        out.push_str(&barline_token(bar.close_barline, next_open));
        if style == Style::Source && bar.line_break {
            out.push('\n');
        }
    }
}

use crate::abc::{parse_tune, Tune};

/// The composer's reply split into commentary and tune.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposerOutput {
    pub commentary: String,
    /// The tune block as written, when one was found.
    pub abc: Option<String>,
    pub tune: Option<Tune>,
}

fn is_header_line(line: &str) -> bool {
    let l = line.trim_start().as_bytes();
    l.len() >= 2 && matches!(l[0], b'X' | b'T' | b'M' | b'K') && l[1] == b':'
}

fn is_field_line(line: &str) -> bool {
    let l = line.trim_start().as_bytes();
    l.len() >= 2 && l[0].is_ascii_alphabetic() && l[1] == b':'
}

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with("```")
}

/// Byte offsets of each line start, plus the text length.
fn line_starts(raw: &str) -> Vec<usize> {
    let mut starts = vec![0];
    starts.extend(raw.match_indices('\n').map(|(i, _)| i + 1));
    if *starts.last().unwrap() != raw.len() {
        starts.push(raw.len());
    }
    starts
}

/// Returns (byte offset where the block starts, block text).
fn fenced_block(raw: &str, lines: &[&str], starts: &[usize]) -> Option<(usize, String)> {
    let mut i = 0;
    while i < lines.len() {
        if is_fence(lines[i]) {
            let open = i;
            let close = (open + 1..lines.len()).find(|&j| is_fence(lines[j])).unwrap_or(lines.len());
            let body = &lines[open + 1..close];
            if body.iter().any(|l| is_header_line(l)) {
                return Some((starts[open].min(raw.len()), body.join("\n")));
            }
            i = close + 1;
        } else {
            i += 1;
        }
    }
    None
}

/// From the first header line through the last line that is a field,
/// comment or barred music line, stopping at a blank line once music began.
fn bare_block(raw: &str, lines: &[&str], starts: &[usize]) -> Option<(usize, String)> {
    let first = lines.iter().position(|l| is_header_line(l))?;
    let mut last = first;
    for (j, line) in lines.iter().enumerate().skip(first + 1) {
        let t = line.trim();
        if t.is_empty() {
            break;
        }
        if is_field_line(t) || t.starts_with('%') || t.contains('|') {
            last = j;
        } else {
            break;
        }
    }
    Some((starts[first].min(raw.len()), lines[first..=last].join("\n")))
}

/// Finds the tune in a composer reply: the first fenced block holding abc
/// header lines, else a bare span starting at the first `X:`/`T:`/`M:`/`K:`
/// line. Commentary is the trimmed text before the tune.
pub fn parse_composer_output(raw: &str) -> ComposerOutput {
    let lines: Vec<&str> = raw.lines().collect();
    let starts = line_starts(raw);
    let found = fenced_block(raw, &lines, &starts).or_else(|| bare_block(raw, &lines, &starts));
    match found {
        Some((offset, block)) => ComposerOutput {
            commentary: raw[..offset].trim().to_string(),
            tune: parse_tune(&block).ok(),
            abc: Some(block),
        },
        None => ComposerOutput {
            commentary: raw.trim().to_string(),
            abc: None,
            tune: None,
        },
    }
}

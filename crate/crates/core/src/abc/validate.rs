//! Bar-fill and header checks.
//!
//! Every measured bar must fill the meter exactly, except pickups: the first
//! bar of the tune may be short, and a short bar that opens a section is
//! allowed when the short bar closing that section makes up the difference.
//! Sections start at `|:`, after `||`/`|]`, and after `:|` unless the next bar
//! is a variant ending. Nested repeats are not modelled.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::model::{bar_fill, Bar, Barline, EventKind, OpaqueKind, Rational, Tune};
use crate::rational::ratio_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    BarOverfull,
    BarUnderfull,
    MissingMeter,
    MissingKey,
    UnparseableToken,
    /// The tune has tuplets; fill checks were not run.
    SkippedTuplet,
    /// An inline `M:`/`L:` change; fill checks were not run.
    SkippedInlineField,
    /// One bar holds a chord or bar rest whose length is not tracked.
    SkippedBar,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BarOverfull => "BAR_OVERFULL",
            Self::BarUnderfull => "BAR_UNDERFULL",
            Self::MissingMeter => "MISSING_METER",
            Self::MissingKey => "MISSING_KEY",
            Self::UnparseableToken => "UNPARSEABLE_TOKEN",
            Self::SkippedTuplet => "SKIPPED_TUPLET",
            Self::SkippedInlineField => "SKIPPED_INLINE_FIELD",
            Self::SkippedBar => "SKIPPED_BAR",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub code: IssueCode,
    pub bar_index: Option<usize>,
    pub detail: String,
    /// Fill the bar should have had, after any pickup credit.
    #[serde(with = "crate::rational::serde_text_opt", default)]
    pub expected: Option<Rational>,
    #[serde(with = "crate::rational::serde_text_opt", default)]
    pub actual: Option<Rational>,
}

impl ValidationIssue {
    fn tune_level(severity: Severity, code: IssueCode, detail: impl Into<String>) -> Self {
        Self {
            severity,
            code,
            bar_index: None,
            detail: detail.into(),
            expected: None,
            actual: None,
        }
    }

    /// `expected - actual` for underfull bars.
    pub fn deficit(&self) -> Option<Rational> {
        Some(self.expected? - self.actual?)
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// `bar 8: warning BAR_UNDERFULL: <detail>`; bars count from 0, so a
/// leading pickup is bar 0.
impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.bar_index {
            Some(i) => write!(f, "bar {i}: ")?,
            None => f.write_str("tune: ")?,
        }
        write!(f, "{} {}: {}", self.severity, self.code, self.detail)
    }
}

pub fn validate(tune: &Tune) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();

    if tune.header.key.is_none() {
        issues.push(ValidationIssue::tune_level(
            Severity::Warning,
            IssueCode::MissingKey,
            "no K: field",
        ));
    }
    for (i, bar) in tune.body.iter().enumerate() {
        for ev in &bar.events {
            if let EventKind::Opaque {
                kind: OpaqueKind::Unknown,
                text,
            } = &ev.kind
            {
                issues.push(ValidationIssue {
                    severity: Severity::Warning,
                    code: IssueCode::UnparseableToken,
                    bar_index: Some(i),
                    detail: format!("unrecognised token {text:?}"),
                    expected: None,
                    actual: None,
                });
            }
        }
    }

    check_fill(tune, &mut issues);

    // Stable sort keeps per-bar emission order; tune-level issues come first.
    issues.sort_by_key(|issue| issue.bar_index.map_or(0, |b| b + 1));
    issues
}

fn check_fill(tune: &Tune, issues: &mut Vec<ValidationIssue>) {
    let has_timed = tune.body.iter().any(Bar::has_timed_events);
    let meter = match &tune.header.meter {
        None => {
            if has_timed {
                issues.push(ValidationIssue::tune_level(
                    Severity::Error,
                    IssueCode::MissingMeter,
                    "no M: field; bar fill cannot be checked",
                ));
            }
            return;
        }
        Some(m) => match m.value() {
            Some(v) => v,
            None => {
                if has_timed {
                    issues.push(ValidationIssue::tune_level(
                        Severity::Warning,
                        IssueCode::MissingMeter,
                        format!("meter {m} is not measurable; bar fill not checked"),
                    ));
                }
                return;
            }
        },
    };

    let opaque: Vec<(OpaqueKind, &str)> = tune
        .events()
        .filter_map(|e| match &e.kind {
            EventKind::Opaque { kind, text } => Some((*kind, text.as_str())),
            _ => None,
        })
        .collect();
    if opaque.iter().any(|(k, _)| *k == OpaqueKind::Tuplet) {
        issues.push(ValidationIssue::tune_level(
            Severity::Warning,
            IssueCode::SkippedTuplet,
            "tune contains tuplets; bar fill not checked",
        ));
        return;
    }
    if opaque.iter().any(|&(k, text)| {
        k == OpaqueKind::InlineField && (text.starts_with("[M:") || text.starts_with("[L:"))
    }) {
        issues.push(ValidationIssue::tune_level(
            Severity::Warning,
            IssueCode::SkippedInlineField,
            "meter or unit length changes inside the body; bar fill not checked",
        ));
        return;
    }

    let unit = tune.unit_length();
    let bars = &tune.body;
    let mut measured = Vec::new();
    for (i, bar) in bars.iter().enumerate() {
        let hides = bar
            .events
            .iter()
            .any(|e| e.opaque_kind().is_some_and(OpaqueKind::hides_duration));
        if hides {
            issues.push(ValidationIssue {
                severity: Severity::Warning,
                code: IssueCode::SkippedBar,
                bar_index: Some(i),
                detail: "bar contains a chord or bar rest; fill not checked".into(),
                expected: None,
                actual: None,
            });
        } else if bar.has_timed_events() {
            measured.push(i);
        }
    }
    let Some(&first) = measured.first() else {
        return;
    };
    let last = *measured.last().expect("non-empty");

    let fills: Vec<Rational> = bars.iter().map(|b| bar_fill(b, unit)).collect();
    let section_of: Vec<usize> = (0..bars.len()).map(|i| section_start(bars, i)).collect();
    // First measured bar of each section.
    let opener = |i: usize| -> usize {
        let s = section_of[i];
        measured
            .iter()
            .copied()
            .find(|&m| m >= s && section_of[m] == s)
            .unwrap_or(i)
    };
    let ends_section = |i: usize| {
        i == last
            || matches!(
                bars[i].close_barline,
                Barline::RepeatEnd | Barline::Double | Barline::Final
            )
    };

    for &i in &measured {
        let fill = fills[i];
        if fill > meter {
            issues.push(fill_issue(
                Severity::Error,
                IssueCode::BarOverfull,
                i,
                meter,
                fill,
                format!("bar {i} holds {} but the meter is {}", ratio_text(&fill), ratio_text(&meter)),
            ));
            continue;
        }
        if fill == meter || i == first {
            continue;
        }
        let start = opener(i);
        if start == i {
            // A short section opener is a pickup if some short bar closing the
            // same section completes it.
            let completed = measured.iter().any(|&j| {
                j > i && section_of[j] == section_of[i] && ends_section(j) && fills[j] + fill == meter
            });
            if !completed {
                issues.push(underfull(i, meter, fill, None));
            }
            continue;
        }
        if ends_section(i) && fills[start] < meter && !fills[start].is_zero() {
            let credit = fills[start];
            if fill + credit != meter {
                issues.push(underfull(i, meter - credit, fill, Some((meter, credit))));
            }
            continue;
        }
        issues.push(underfull(i, meter, fill, None));
    }
}

fn fill_issue(
    severity: Severity,
    code: IssueCode,
    bar: usize,
    expected: Rational,
    actual: Rational,
    detail: String,
) -> ValidationIssue {
    ValidationIssue {
        severity,
        code,
        bar_index: Some(bar),
        detail,
        expected: Some(expected),
        actual: Some(actual),
    }
}

fn underfull(bar: usize, expected: Rational, actual: Rational, credit: Option<(Rational, Rational)>) -> ValidationIssue {
    let deficit = expected - actual;
    let detail = match credit {
        Some((meter, pickup)) => format!(
            "bar {bar} holds {} but expected {} (meter {} less {} pickup); short by {}",
            ratio_text(&actual),
            ratio_text(&expected),
            ratio_text(&meter),
            ratio_text(&pickup),
            ratio_text(&deficit),
        ),
        None => format!(
            "bar {bar} holds {} but expected {}; short by {}",
            ratio_text(&actual),
            ratio_text(&expected),
            ratio_text(&deficit),
        ),
    };
    fill_issue(Severity::Warning, IssueCode::BarUnderfull, bar, expected, actual, detail)
}

fn section_start(bars: &[Bar], i: usize) -> usize {
    let mut j = i;
    loop {
        if j == 0 || bars[j].open_barline == Barline::RepeatStart {
            return j;
        }
        match bars[j - 1].close_barline {
            Barline::Double | Barline::Final => return j,
            Barline::RepeatEnd if bars[j].ending.is_none() => return j,
            _ => {}
        }
        j -= 1;
    }
}

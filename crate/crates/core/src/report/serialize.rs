use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{parse_report, ClaimItem, IntentSpan, Paragraph, Report, Segment};
use crate::intent::IntentCategory;

/// Which intent spans a serialized report keeps. Citation markers and
/// section/TLDR lines are emitted in every mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SerializeMode {
    Full,
    Stripped,
    ParagraphOnly,
    CitationOnly,
}

impl SerializeMode {
    pub const ALL: [SerializeMode; 4] = [
        SerializeMode::Full,
        SerializeMode::Stripped,
        SerializeMode::ParagraphOnly,
        SerializeMode::CitationOnly,
    ];

    pub fn keeps(self, category: IntentCategory) -> bool {
        match self {
            SerializeMode::Full => true,
            SerializeMode::Stripped => false,
            SerializeMode::ParagraphOnly => category == IntentCategory::Paragraph,
            SerializeMode::CitationOnly => category == IntentCategory::Citation,
        }
    }
}

impl FromStr for SerializeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "full" => Ok(SerializeMode::Full),
            "stripped" | "strip" => Ok(SerializeMode::Stripped),
            "paragraph-only" => Ok(SerializeMode::ParagraphOnly),
            "citation-only" => Ok(SerializeMode::CitationOnly),
            other => Err(format!("unknown serialization mode `{other}`")),
        }
    }
}

/// Renders a report in canonical form: `SECTION; title` and `TLDR; text`
/// lines, one blank line between paragraphs, single spaces around tags and
/// `[n]` markers.
pub fn serialize_report(report: &Report, mode: SerializeMode) -> String {
    let mut blocks: Vec<String> = Vec::new();
    for (i, section) in report.sections.iter().enumerate() {
        let body: Vec<String> = section
            .paragraphs
            .iter()
            .map(|p| render_paragraph(p, mode))
            .filter(|p| !p.is_empty())
            .collect();
        let mut head: Vec<String> = Vec::new();
        if !section.tldr.is_empty() {
            head.push(format!("TLDR; {}", section.tldr));
        } else if body
            .iter()
            .flat_map(|p| p.lines())
            .any(|l| l.trim_start().starts_with("TLDR;"))
        {
            // Otherwise that paragraph line would be read back as the TLDR.
            head.push("TLDR;".to_string());
        }
        // An untitled first section is implicit unless it would vanish.
        if i > 0 || !section.title.is_empty() || (head.is_empty() && body.is_empty()) {
            let marker = if section.title.is_empty() {
                "SECTION;".to_string()
            } else {
                format!("SECTION; {}", section.title)
            };
            head.insert(0, marker);
        }
        if !head.is_empty() {
            blocks.push(head.join("\n"));
        }
        blocks.extend(body);
    }
    if blocks.is_empty() {
        return String::new();
    }
    let mut out = blocks.join("\n\n");
    out.push('\n');
    out
}

/// Removes every intent span; equivalent to parsing and serializing with
/// [`SerializeMode::Stripped`].
pub fn strip_intents(raw: &str) -> String {
    serialize_report(&parse_report(raw), SerializeMode::Stripped)
}

pub(crate) fn render_span(span: &IntentSpan) -> String {
    let category = span.category();
    if span.rationale.is_empty() {
        format!("{}[{}]: {}", category.begin_tag(), span.raw_label, category.end_tag())
    } else {
        format!(
            "{}[{}]: {} {}",
            category.begin_tag(),
            span.raw_label,
            span.rationale,
            category.end_tag()
        )
    }
}

pub(crate) fn render_paragraph(paragraph: &Paragraph, mode: SerializeMode) -> String {
    let mut out = String::new();
    if let Some(pit) = &paragraph.paragraph_intent {
        if mode.keeps(IntentCategory::Paragraph) {
            out.push_str(&render_span(pit));
        }
    }
    let body = render_segments(&paragraph.segments, mode);
    if !body.is_empty() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&body);
    }
    out
}

pub(crate) fn render_segments(segments: &[Segment], mode: SerializeMode) -> String {
    let mut out = String::new();
    let keep_cit = mode.keeps(IntentCategory::Citation);
    for segment in segments {
        match segment {
            Segment::PlainText(text) => out.push_str(text),
            Segment::Claim(claim) => {
                out.push_str(claim.text());
                for item in claim.items() {
                    let rendered = match item {
                        ClaimItem::Intent(span) if keep_cit => render_span(span),
                        ClaimItem::Intent(_) => continue,
                        ClaimItem::Citation(cite) => cite.marker(),
                    };
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(&rendered);
                }
            }
        }
    }
    out
}

/// Whitespace-insensitive form used to compare documents: each line is
/// collapsed and trimmed, runs of blank lines become one, and the whole text
/// is trimmed.
pub fn canonical_whitespace(text: &str) -> String {
    let mut lines: Vec<String> = Vec::new();
    for line in text.lines() {
        let collapsed = line.split_whitespace().collect::<Vec<_>>().join(" ");
        if collapsed.is_empty() && lines.last().is_none_or(|l| l.is_empty()) {
            continue;
        }
        lines.push(collapsed);
    }
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

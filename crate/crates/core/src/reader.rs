//! Payloads for the reading interface. The baseline condition shows titles,
//! TLDRs, first sentences and folded bodies; the intent condition adds the
//! paragraph and citation intents with their rationales.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::annotation::{Condition, ItemId};
use crate::candidates::SnippetCandidate;
use crate::intent::IntentCategory;
use crate::report::{CitationRef, IntentSpan, Paragraph, Report, Segment};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReaderIntent {
    pub label: String,
    pub kind: String,
    pub rationale: String,
}

impl From<&IntentSpan> for ReaderIntent {
    fn from(s: &IntentSpan) -> Self {
        ReaderIntent {
            label: s.raw_label.clone(),
            kind: s.intent_type.kind_key().to_string(),
            rationale: s.rationale.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReaderCitation {
    pub item_id: ItemId,
    pub ordinal: usize,
    pub marker: String,
    /// Candidate number, absent for model-memory citations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<u32>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub intents: Vec<ReaderIntent>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReaderParagraph {
    pub item_id: ItemId,
    pub first_sentence: String,
    pub body: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intent: Option<ReaderIntent>,
    pub citations: Vec<ReaderCitation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReaderSection {
    pub index: usize,
    pub title: String,
    pub tldr: String,
    pub paragraphs: Vec<ReaderParagraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReaderSnippet {
    pub paper_id: String,
    pub title: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReaderPayload {
    pub report_id: String,
    pub query: String,
    pub condition: Condition,
    pub sections: Vec<ReaderSection>,
    /// Keyed by citation number.
    pub candidates: BTreeMap<u32, ReaderSnippet>,
}

pub fn reader_payload(
    report_id: &str,
    query: &str,
    report: &Report,
    candidates: &[SnippetCandidate],
    condition: Condition,
) -> ReaderPayload {
    let with_intents = condition == Condition::Intent;
    let sections = report
        .sections
        .iter()
        .enumerate()
        .map(|(si, section)| ReaderSection {
            index: si,
            title: section.title.clone(),
            tldr: section.tldr.clone(),
            paragraphs: section
                .paragraphs
                .iter()
                .enumerate()
                .map(|(pi, p)| paragraph(si, pi, p, with_intents))
                .collect(),
        })
        .collect();
    ReaderPayload {
        report_id: report_id.to_string(),
        query: query.to_string(),
        condition,
        sections,
        candidates: candidates
            .iter()
            .map(|c| {
                (
                    c.index,
                    ReaderSnippet {
                        paper_id: c.paper_id.clone(),
                        title: c.title.clone(),
                        snippet: c.quote().to_string(),
                    },
                )
            })
            .collect(),
    }
}

fn paragraph(si: usize, pi: usize, p: &Paragraph, with_intents: bool) -> ReaderParagraph {
    let mut citations = Vec::new();
    for segment in &p.segments {
        let Segment::Claim(claim) = segment else {
            continue;
        };
        for (pos, cite) in claim.citations().iter().enumerate() {
            let ordinal = citations.len();
            let intents = if with_intents {
                claim
                    .intents_for_citation(pos)
                    .into_iter()
                    .filter(|s| s.category() == IntentCategory::Citation)
                    .map(ReaderIntent::from)
                    .collect()
            } else {
                Vec::new()
            };
            citations.push(ReaderCitation {
                item_id: ItemId::citation(si, pi, ordinal),
                ordinal,
                marker: cite.marker(),
                index: match cite {
                    CitationRef::Candidate(i) => Some(i.get()),
                    CitationRef::LlmMemory => None,
                },
                intents,
            });
        }
    }
    let body = p.body_text();
    ReaderParagraph {
        item_id: ItemId::paragraph(si, pi),
        first_sentence: first_sentence(&body),
        body,
        intent: p
            .paragraph_intent
            .as_ref()
            .filter(|_| with_intents)
            .map(ReaderIntent::from),
        citations,
    }
}

const ABBREVIATIONS: [&str; 6] = ["e.g.", "i.e.", "al.", "etc.", "vs.", "Fig."];

/// Text up to and including the first sentence end: `.`, `!` or `?`
/// (plus any citation markers right after it) followed by whitespace or
/// the end of the text. Common abbreviations do not end a sentence.
pub fn first_sentence(text: &str) -> String {
    let text = text.trim();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if matches!(bytes[i], b'.' | b'!' | b'?') {
            let end = i + 1;
            let at_break = end == bytes.len() || bytes[end].is_ascii_whitespace();
            let abbreviation = ABBREVIATIONS.iter().any(|a| text[..end].ends_with(a));
            if at_break && !abbreviation {
                return text[..end].to_string();
            }
        }
        i += 1;
    }
    text.to_string()
}

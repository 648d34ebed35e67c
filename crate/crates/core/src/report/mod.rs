//! Report document model and the inline intent-tag grammar.
//!
//! A raw report is a sequence of sections opened by `SECTION;` lines. Each
//! section carries a one-line `TLDR;` and blank-line separated paragraphs.
//! Paragraphs may open with a paragraph intent span
//! `<bpit>[type]: rationale <epit>`; citation intent spans
//! `<bcit>[type]: rationale <ecit>` sit between a claim and its citation
//! markers (`[n]`, `[Citation n]` or `[LLM MEMORY | 2025]`).

mod json;
mod lexer;
mod parser;
mod serialize;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::num::NonZeroU32;

pub use json::ReportJsonError;
pub use parser::parse_report;
pub use serialize::{canonical_whitespace, serialize_report, strip_intents, SerializeMode};
pub use validate::{validate_report, MAX_CITATION_RUN};

pub use crate::diagnostics::{Diagnostic, DiagnosticCode, Severity, SourceRange};
pub use crate::intent::{IntentCategory, IntentType};

/// Exact literal for citations drawn from the model's own knowledge.
pub const LLM_MEMORY_MARKER: &str = "[LLM MEMORY | 2025]";

/// The four intent tag literals.
pub const TAG_LITERALS: [&str; 4] = ["<bcit>", "<ecit>", "<bpit>", "<epit>"];

/// 1-based index into a candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateIndex(NonZeroU32);

impl CandidateIndex {
    pub fn new(n: u32) -> Option<Self> {
        NonZeroU32::new(n).map(CandidateIndex)
    }

    pub fn get(self) -> u32 {
        self.0.get()
    }
}

impl fmt::Display for CandidateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CitationRef {
    Candidate(CandidateIndex),
    LlmMemory,
}

impl CitationRef {
    pub fn candidate(n: u32) -> Option<Self> {
        CandidateIndex::new(n).map(CitationRef::Candidate)
    }

    pub fn candidate_index(self) -> Option<CandidateIndex> {
        match self {
            CitationRef::Candidate(i) => Some(i),
            CitationRef::LlmMemory => None,
        }
    }

    /// Canonical marker text (`[n]` or the LLM memory literal).
    pub fn marker(self) -> String {
        match self {
            CitationRef::Candidate(i) => format!("[{i}]"),
            CitationRef::LlmMemory => LLM_MEMORY_MARKER.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntentSpan {
    pub intent_type: IntentType,
    pub rationale: String,
    /// Byte range of the whole span (tags included) in the raw document.
    pub source_range: SourceRange,
    pub raw_label: String,
}

impl IntentSpan {
    pub fn category(&self) -> IntentCategory {
        self.intent_type.category()
    }

    /// Equality ignoring source positions.
    pub fn same_content(&self, other: &IntentSpan) -> bool {
        self.intent_type == other.intent_type
            && self.rationale == other.rationale
            && self.raw_label == other.raw_label
    }
}

/// One element of a claim's annotation run, in document order.
#[derive(Debug, Clone, Copy)]
pub enum ClaimItem<'a> {
    Intent(&'a IntentSpan),
    Citation(CitationRef),
}

/// A text run followed by citation intents and citation markers.
///
/// `intent_slots[i]` is the number of citations that precede intent `i`
/// in the document, which keeps the interleaving of intents and markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitedClaim {
    text: String,
    citation_intents: Vec<IntentSpan>,
    citations: Vec<CitationRef>,
    intent_slots: Vec<usize>,
    source_range: SourceRange,
}

/// Owned counterpart of [`ClaimItem`], used to build claims.
#[derive(Debug, Clone)]
pub enum ClaimPart {
    Intent(IntentSpan),
    Citation(CitationRef),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClaimError {
    #[error("citation intent has category {0}")]
    WrongCategory(IntentCategory),
    #[error("intent slot {slot} exceeds {citations} citations or is out of order")]
    BadSlot { slot: usize, citations: usize },
    #[error("intent_slots has {slots} entries for {intents} intents")]
    SlotCount { slots: usize, intents: usize },
}

impl CitedClaim {
    /// Builds a claim from its text and ordered annotation parts.
    pub fn new(
        text: impl Into<String>,
        parts: impl IntoIterator<Item = ClaimPart>,
        source_range: SourceRange,
    ) -> Result<Self, ClaimError> {
        let mut claim = CitedClaim {
            text: text.into(),
            citation_intents: Vec::new(),
            citations: Vec::new(),
            intent_slots: Vec::new(),
            source_range,
        };
        for part in parts {
            match part {
                ClaimPart::Intent(span) => {
                    if span.category() != IntentCategory::Citation {
                        return Err(ClaimError::WrongCategory(span.category()));
                    }
                    claim.intent_slots.push(claim.citations.len());
                    claim.citation_intents.push(span);
                }
                ClaimPart::Citation(c) => claim.citations.push(c),
            }
        }
        Ok(claim)
    }

    /// Rebuilds a claim from its list form, checking slot consistency.
    pub fn from_parts(
        text: String,
        citation_intents: Vec<IntentSpan>,
        citations: Vec<CitationRef>,
        intent_slots: Vec<usize>,
        source_range: SourceRange,
    ) -> Result<Self, ClaimError> {
        if intent_slots.len() != citation_intents.len() {
            return Err(ClaimError::SlotCount {
                slots: intent_slots.len(),
                intents: citation_intents.len(),
            });
        }
        if let Some(span) = citation_intents
            .iter()
            .find(|s| s.category() != IntentCategory::Citation)
        {
            return Err(ClaimError::WrongCategory(span.category()));
        }
        let mut prev = 0;
        for &slot in &intent_slots {
            if slot > citations.len() || slot < prev {
                return Err(ClaimError::BadSlot {
                    slot,
                    citations: citations.len(),
                });
            }
            prev = slot;
        }
        Ok(CitedClaim {
            text,
            citation_intents,
            citations,
            intent_slots,
            source_range,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn citation_intents(&self) -> &[IntentSpan] {
        &self.citation_intents
    }

    pub fn citations(&self) -> &[CitationRef] {
        &self.citations
    }

    pub fn intent_slots(&self) -> &[usize] {
        &self.intent_slots
    }

    pub fn source_range(&self) -> SourceRange {
        self.source_range
    }

    /// Intents and citations interleaved in document order.
    pub fn items(&self) -> impl Iterator<Item = ClaimItem<'_>> + '_ {
        let mut out = Vec::with_capacity(self.citation_intents.len() + self.citations.len());
        let mut next_intent = 0;
        for (ci, &cite) in self.citations.iter().enumerate() {
            while next_intent < self.citation_intents.len() && self.intent_slots[next_intent] == ci {
                out.push(ClaimItem::Intent(&self.citation_intents[next_intent]));
                next_intent += 1;
            }
            out.push(ClaimItem::Citation(cite));
        }
        for span in &self.citation_intents[next_intent..] {
            out.push(ClaimItem::Intent(span));
        }
        out.into_iter()
    }

    /// Citation intents that apply to the citation at `position`.
    ///
    /// Intents rendered before a group of markers apply to that group; when
    /// a group has as many intents as markers they pair one-to-one.
    pub fn intents_for_citation(&self, position: usize) -> Vec<&IntentSpan> {
        if position >= self.citations.len() {
            return Vec::new();
        }
        // Group start: the largest slot value <= position.
        let Some(group_start) = self.intent_slots.iter().copied().filter(|&s| s <= position).max()
        else {
            return Vec::new();
        };
        let group_end = self
            .intent_slots
            .iter()
            .copied()
            .filter(|&s| s > group_start)
            .min()
            .unwrap_or(self.citations.len());
        let group: Vec<&IntentSpan> = self
            .citation_intents
            .iter()
            .zip(&self.intent_slots)
            .filter(|(_, &s)| s == group_start)
            .map(|(span, _)| span)
            .collect();
        if group.len() > 1 && group.len() == group_end - group_start {
            vec![group[position - group_start]]
        } else {
            group
        }
    }

    fn same_structure(&self, other: &CitedClaim) -> bool {
        self.text == other.text
            && self.citations == other.citations
            && self.intent_slots == other.intent_slots
            && spans_match(&self.citation_intents, &other.citation_intents)
    }
}

fn spans_match(a: &[IntentSpan], b: &[IntentSpan]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_content(y))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    PlainText(String),
    Claim(CitedClaim),
}

impl Segment {
    pub fn text(&self) -> &str {
        match self {
            Segment::PlainText(t) => t,
            Segment::Claim(c) => c.text(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Paragraph {
    pub paragraph_intent: Option<IntentSpan>,
    pub segments: Vec<Segment>,
    pub source_range: SourceRange,
}

impl Paragraph {
    pub fn claims(&self) -> impl Iterator<Item = &CitedClaim> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Claim(c) => Some(c),
            Segment::PlainText(_) => None,
        })
    }

    pub fn citations(&self) -> impl Iterator<Item = CitationRef> + '_ {
        self.claims().flat_map(|c| c.citations().iter().copied())
    }

    /// Paragraph text without intent tags, citation markers kept.
    pub fn body_text(&self) -> String {
        serialize::render_segments(&self.segments, SerializeMode::Stripped)
    }

    pub fn is_empty(&self) -> bool {
        self.paragraph_intent.is_none() && self.segments.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Section {
    pub title: String,
    pub tldr: String,
    pub paragraphs: Vec<Paragraph>,
    /// Range of the `SECTION;` line (empty for the implicit preamble section).
    pub title_range: SourceRange,
    /// Range of the `TLDR;` line, empty when absent.
    pub tldr_range: SourceRange,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub sections: Vec<Section>,
    pub raw_text: String,
    pub diagnostics: Vec<Diagnostic>,
}

impl Report {
    pub fn paragraphs(&self) -> impl Iterator<Item = &Paragraph> {
        self.sections.iter().flat_map(|s| s.paragraphs.iter())
    }

    pub fn claims(&self) -> impl Iterator<Item = &CitedClaim> {
        self.paragraphs().flat_map(|p| p.claims())
    }

    /// All intent spans in document order.
    pub fn intent_spans(&self) -> impl Iterator<Item = &IntentSpan> {
        self.paragraphs().flat_map(|p| {
            p.paragraph_intent.iter().chain(
                p.claims()
                    .flat_map(|c| c.citation_intents().iter()),
            )
        })
    }

    pub fn spans_of(&self, category: IntentCategory) -> impl Iterator<Item = &IntentSpan> {
        self.intent_spans().filter(move |s| s.category() == category)
    }

    /// Every citation in document order.
    pub fn citations(&self) -> impl Iterator<Item = CitationRef> + '_ {
        self.paragraphs().flat_map(|p| p.citations())
    }

    /// Distinct candidate indices cited anywhere in the report.
    pub fn cited_candidates(&self) -> BTreeSet<CandidateIndex> {
        self.citations().filter_map(CitationRef::candidate_index).collect()
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }

    /// Equality of the section/paragraph/intent/citation trees, ignoring
    /// source positions, raw text and diagnostics.
    pub fn structurally_eq(&self, other: &Report) -> bool {
        self.sections.len() == other.sections.len()
            && self.sections.iter().zip(&other.sections).all(|(a, b)| {
                a.title == b.title
                    && a.tldr == b.tldr
                    && a.paragraphs.len() == b.paragraphs.len()
                    && a.paragraphs.iter().zip(&b.paragraphs).all(|(p, q)| {
                        let intents_eq = match (&p.paragraph_intent, &q.paragraph_intent) {
                            (None, None) => true,
                            (Some(x), Some(y)) => x.same_content(y),
                            _ => false,
                        };
                        intents_eq
                            && p.segments.len() == q.segments.len()
                            && p.segments.iter().zip(&q.segments).all(|pair| match pair {
                                (Segment::PlainText(x), Segment::PlainText(y)) => x == y,
                                (Segment::Claim(x), Segment::Claim(y)) => x.same_structure(y),
                                _ => false,
                            })
                    })
            })
    }
}

//! JSON encoding of [`Report`]. Field names are part of the published
//! schema (`docs/report-schema.md`); decoding re-checks every model
//! invariant.

use serde::{Deserialize, Serialize};

use super::{
    CandidateIndex, CitationRef, CitedClaim, ClaimError, Diagnostic, IntentSpan, Paragraph, Report,
    Section, Segment, SourceRange,
};
use crate::intent::{IntentCategory, IntentType};

#[derive(Debug, thiserror::Error)]
pub enum ReportJsonError {
    #[error("malformed report JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("intent kind `{kind}` is not a {category} kind")]
    KindMismatch { category: IntentCategory, kind: String },
    #[error("paragraph_intent must have category paragraph")]
    ParagraphIntentCategory,
    #[error("invalid claim: {0}")]
    Claim(#[from] ClaimError),
    #[error("candidate citation index must be >= 1")]
    ZeroIndex,
    #[error("intent span range {start}..{end} does not resolve inside raw_text ({len} bytes)")]
    SpanRange { start: usize, end: usize, len: usize },
}

#[derive(Serialize, Deserialize)]
pub(super) struct IntentSpanDto {
    category: IntentCategory,
    kind: String,
    raw_label: String,
    rationale: String,
    source_range: SourceRange,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum CitationDto {
    Candidate { index: u32 },
    LlmMemory,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum SegmentDto {
    Text {
        text: String,
    },
    Claim {
        text: String,
        citation_intents: Vec<IntentSpanDto>,
        citations: Vec<CitationDto>,
        intent_slots: Vec<usize>,
        source_range: SourceRange,
    },
}

#[derive(Serialize, Deserialize)]
struct ParagraphDto {
    paragraph_intent: Option<IntentSpanDto>,
    segments: Vec<SegmentDto>,
    source_range: SourceRange,
}

#[derive(Serialize, Deserialize)]
struct SectionDto {
    title: String,
    tldr: String,
    paragraphs: Vec<ParagraphDto>,
    #[serde(default)]
    title_range: SourceRange,
    #[serde(default)]
    tldr_range: SourceRange,
}

#[derive(Serialize, Deserialize)]
pub(super) struct ReportDto {
    sections: Vec<SectionDto>,
    raw_text: String,
    diagnostics: Vec<Diagnostic>,
}

impl From<&IntentSpan> for IntentSpanDto {
    fn from(span: &IntentSpan) -> Self {
        IntentSpanDto {
            category: span.category(),
            kind: span.intent_type.kind_key().to_string(),
            raw_label: span.raw_label.clone(),
            rationale: span.rationale.clone(),
            source_range: span.source_range,
        }
    }
}

impl From<CitationRef> for CitationDto {
    fn from(c: CitationRef) -> Self {
        match c {
            CitationRef::Candidate(i) => CitationDto::Candidate { index: i.get() },
            CitationRef::LlmMemory => CitationDto::LlmMemory,
        }
    }
}

impl From<&Report> for ReportDto {
    fn from(report: &Report) -> Self {
        ReportDto {
            sections: report
                .sections
                .iter()
                .map(|s| SectionDto {
                    title: s.title.clone(),
                    tldr: s.tldr.clone(),
                    title_range: s.title_range,
                    tldr_range: s.tldr_range,
                    paragraphs: s
                        .paragraphs
                        .iter()
                        .map(|p| ParagraphDto {
                            paragraph_intent: p.paragraph_intent.as_ref().map(IntentSpanDto::from),
                            source_range: p.source_range,
                            segments: p
                                .segments
                                .iter()
                                .map(|seg| match seg {
                                    Segment::PlainText(t) => SegmentDto::Text { text: t.clone() },
                                    Segment::Claim(c) => SegmentDto::Claim {
                                        text: c.text().to_string(),
                                        citation_intents: c
                                            .citation_intents()
                                            .iter()
                                            .map(IntentSpanDto::from)
                                            .collect(),
                                        citations: c.citations().iter().map(|&x| x.into()).collect(),
                                        intent_slots: c.intent_slots().to_vec(),
                                        source_range: c.source_range(),
                                    },
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
            raw_text: report.raw_text.clone(),
            diagnostics: report.diagnostics.clone(),
        }
    }
}

impl From<Report> for ReportDto {
    fn from(report: Report) -> Self {
        ReportDto::from(&report)
    }
}

fn span_from(dto: IntentSpanDto, raw_len: usize) -> Result<IntentSpan, ReportJsonError> {
    let intent_type = IntentType::from_kind_key(dto.category, &dto.kind, &dto.raw_label).ok_or(
        ReportJsonError::KindMismatch {
            category: dto.category,
            kind: dto.kind,
        },
    )?;
    let r = dto.source_range;
    if r.start >= r.end || r.end > raw_len {
        return Err(ReportJsonError::SpanRange {
            start: r.start,
            end: r.end,
            len: raw_len,
        });
    }
    Ok(IntentSpan {
        intent_type,
        rationale: dto.rationale,
        source_range: r,
        raw_label: dto.raw_label,
    })
}

impl TryFrom<ReportDto> for Report {
    type Error = ReportJsonError;

    fn try_from(dto: ReportDto) -> Result<Self, Self::Error> {
        let raw_len = dto.raw_text.len();
        let mut sections = Vec::with_capacity(dto.sections.len());
        for s in dto.sections {
            let mut paragraphs = Vec::with_capacity(s.paragraphs.len());
            for p in s.paragraphs {
                let paragraph_intent = p
                    .paragraph_intent
                    .map(|i| span_from(i, raw_len))
                    .transpose()?;
                if paragraph_intent
                    .as_ref()
                    .is_some_and(|i| i.category() != IntentCategory::Paragraph)
                {
                    return Err(ReportJsonError::ParagraphIntentCategory);
                }
                let mut segments = Vec::with_capacity(p.segments.len());
                for seg in p.segments {
                    segments.push(match seg {
                        SegmentDto::Text { text } => Segment::PlainText(text),
                        SegmentDto::Claim {
                            text,
                            citation_intents,
                            citations,
                            intent_slots,
                            source_range,
                        } => {
                            let intents = citation_intents
                                .into_iter()
                                .map(|i| span_from(i, raw_len))
                                .collect::<Result<Vec<_>, _>>()?;
                            let cites = citations
                                .into_iter()
                                .map(|c| match c {
                                    CitationDto::Candidate { index } => CandidateIndex::new(index)
                                        .map(CitationRef::Candidate)
                                        .ok_or(ReportJsonError::ZeroIndex),
                                    CitationDto::LlmMemory => Ok(CitationRef::LlmMemory),
                                })
                                .collect::<Result<Vec<_>, _>>()?;
                            Segment::Claim(CitedClaim::from_parts(
                                text,
                                intents,
                                cites,
                                intent_slots,
                                source_range,
                            )?)
                        }
                    });
                }
                paragraphs.push(Paragraph {
                    paragraph_intent,
                    segments,
                    source_range: p.source_range,
                });
            }
            sections.push(Section {
                title: s.title,
                tldr: s.tldr,
                paragraphs,
                title_range: s.title_range,
                tldr_range: s.tldr_range,
            });
        }
        Ok(Report {
            sections,
            raw_text: dto.raw_text,
            diagnostics: dto.diagnostics,
        })
    }
}

impl Serialize for Report {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ReportDto::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Report {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dto = ReportDto::deserialize(deserializer)?;
        Report::try_from(dto).map_err(serde::de::Error::custom)
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Report, ReportJsonError> {
        let dto: ReportDto = serde_json::from_str(text)?;
        Report::try_from(dto)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::parse_report;

    #[test]
    fn json_round_trip_is_exact() {
        let raw = "SECTION; A\nTLDR; t\n\n<bpit>[PIT-Exposition]: e <epit> claim <bcit>[Odd]: r <ecit> [1] [LLM MEMORY | 2025] tail\n";
        let report = parse_report(raw);
        let back = Report::from_json(&report.to_json()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn stable_field_names() {
        let report = parse_report("SECTION; A\nTLDR; t\n\n<bpit>[PIT-Definition]: d <epit> x [2]\n");
        let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        let p = &v["sections"][0]["paragraphs"][0];
        assert_eq!(v["sections"][0]["title"], "A");
        assert_eq!(v["sections"][0]["tldr"], "t");
        assert_eq!(p["paragraph_intent"]["category"], "paragraph");
        assert_eq!(p["paragraph_intent"]["kind"], "definition");
        assert_eq!(p["paragraph_intent"]["raw_label"], "PIT-Definition");
        assert_eq!(p["paragraph_intent"]["rationale"], "d");
        assert_eq!(p["segments"][0]["type"], "claim");
        assert_eq!(p["segments"][0]["citations"][0]["index"], 2);
        assert!(v["diagnostics"].is_array());
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let report = parse_report("SECTION; A\nTLDR; t\n\n<bpit>[PIT-Definition]: d <epit> x [2]\n");
        let good = report.to_json();
        let bad_kind = good.replace("\"definition\"", "\"uses\"");
        assert!(matches!(Report::from_json(&bad_kind), Err(ReportJsonError::KindMismatch { .. })));
        let zero = good.replace("\"index\":2", "\"index\":0");
        assert!(matches!(Report::from_json(&zero), Err(ReportJsonError::ZeroIndex)));
        assert!(Report::from_json("{").is_err());
    }
}

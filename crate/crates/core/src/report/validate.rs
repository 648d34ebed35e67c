use super::lexer::contains_marker;
use super::{CitationRef, Diagnostic, DiagnosticCode, Report};

/// Longest run of citation markers allowed after a single claim.
pub const MAX_CITATION_RUN: usize = 5;

/// Checks a parsed report against the markup rules and the size of the
/// candidate set it was generated from. Parse diagnostics are carried over
/// first, followed by validation findings in document order.
pub fn validate_report(report: &Report, candidate_count: usize) -> Vec<Diagnostic> {
    let mut out = report.diagnostics.clone();
    for section in &report.sections {
        if contains_marker(&section.tldr) {
            out.push(Diagnostic::new(
                DiagnosticCode::TldrHasCitation,
                "TLDR contains a citation marker",
                section.tldr_range,
            ));
        }
        for paragraph in &section.paragraphs {
            if let Some(pit) = &paragraph.paragraph_intent {
                if pit.intent_type.is_other() {
                    out.push(unknown_type(&pit.raw_label, pit.source_range));
                }
            }
            for claim in paragraph.claims() {
                for span in claim.citation_intents() {
                    if span.intent_type.is_other() {
                        out.push(unknown_type(&span.raw_label, span.source_range));
                    }
                }
                if claim.citations().len() > MAX_CITATION_RUN {
                    out.push(Diagnostic::new(
                        DiagnosticCode::CiteRunTooLong,
                        format!(
                            "{} citations in a row; at most {MAX_CITATION_RUN} allowed",
                            claim.citations().len()
                        ),
                        claim.source_range(),
                    ));
                }
                for cite in claim.citations() {
                    if let CitationRef::Candidate(idx) = cite {
                        if idx.get() as usize > candidate_count {
                            out.push(Diagnostic::new(
                                DiagnosticCode::CiteOutOfRange,
                                format!(
                                    "citation [{idx}] exceeds the {candidate_count} available candidates"
                                ),
                                claim.source_range(),
                            ));
                        }
                    }
                }
            }
        }
    }
    out
}

fn unknown_type(label: &str, range: super::SourceRange) -> Diagnostic {
    Diagnostic::new(
        DiagnosticCode::UnknownIntentType,
        format!("intent type `{label}` is not in the schema"),
        range,
    )
}

//! Error-recovering parser for the intent-tag grammar.
//!
//! Structure is recovered line by line (sections, TLDR, blank-line separated
//! paragraphs) before inline tags are read, so a broken tag can never swallow
//! text beyond its paragraph. Every recovery emits a warning diagnostic.

use super::lexer::{lex, Token, TokenKind};
use super::{
    CitedClaim, ClaimPart, Diagnostic, DiagnosticCode, IntentSpan, Paragraph, Report, Section,
    Segment, SourceRange,
};
use crate::intent::{normalize_intent_label, IntentCategory};

const SECTION_MARKER: &str = "SECTION;";
const TLDR_MARKER: &str = "TLDR;";

/// Parses raw model output into a [`Report`]. Never fails; malformed input
/// is recovered and reported through `Report::diagnostics`.
pub fn parse_report(raw: &str) -> Report {
    let mut parser = Parser {
        raw,
        diagnostics: Vec::new(),
    };
    let sections = parser.sections();
    Report {
        sections,
        raw_text: raw.to_string(),
        diagnostics: parser.diagnostics,
    }
}

#[derive(Debug, Clone, Copy)]
struct Line {
    start: usize,
    end: usize,
}

impl Line {
    fn range(self) -> SourceRange {
        SourceRange::new(self.start, self.end)
    }
}

struct RawSection {
    /// Title text range and line range; `None` for the implicit section
    /// holding preamble text.
    header: Option<(SourceRange, SourceRange)>,
    body: Vec<Line>,
}

struct Parser<'a> {
    raw: &'a str,
    diagnostics: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    fn warn(&mut self, code: DiagnosticCode, message: impl Into<String>, range: SourceRange) {
        self.diagnostics.push(Diagnostic::new(code, message, range));
    }

    fn lines(&self) -> Vec<Line> {
        let mut out = Vec::new();
        let mut start = 0;
        for piece in self.raw.split_inclusive('\n') {
            let mut end = start + piece.len();
            let next = end;
            if self.raw[..end].ends_with('\n') {
                end -= 1;
            }
            if self.raw[start..end].ends_with('\r') {
                end -= 1;
            }
            out.push(Line { start, end });
            start = next;
        }
        out
    }

    fn text(&self, line: Line) -> &'a str {
        &self.raw[line.start..line.end]
    }

    fn is_blank(&self, line: Line) -> bool {
        self.text(line).trim().is_empty()
    }

    fn sections(&mut self) -> Vec<Section> {
        let mut raw_sections: Vec<RawSection> = Vec::new();
        for line in self.lines() {
            let text = self.text(line);
            let trimmed = text.trim_start();
            if trimmed.starts_with(SECTION_MARKER) {
                let title_start = line.start + (text.len() - trimmed.len()) + SECTION_MARKER.len();
                raw_sections.push(RawSection {
                    header: Some((SourceRange::new(title_start, line.end), line.range())),
                    body: Vec::new(),
                });
                continue;
            }
            match raw_sections.last_mut() {
                Some(section) => section.body.push(line),
                None if !self.is_blank(line) => {
                    self.warn(
                        DiagnosticCode::PreambleText,
                        "text before the first SECTION; marker forms an untitled section",
                        line.range(),
                    );
                    raw_sections.push(RawSection {
                        header: None,
                        body: vec![line],
                    });
                }
                None => {}
            }
        }
        raw_sections
            .into_iter()
            .map(|raw| self.section(raw))
            .collect()
    }

    fn section(&mut self, raw: RawSection) -> Section {
        let mut section = Section::default();
        let anchor = match &raw.header {
            Some((title, range)) => {
                section.title_range = *range;
                section.title = self.clean_outside_text(*title);
                if section.title.is_empty() {
                    self.warn(DiagnosticCode::EmptySectionTitle, "section title is empty", *range);
                }
                *range
            }
            None => raw.body.first().map(|l| l.range()).unwrap_or_default(),
        };

        let tldr_at = raw
            .body
            .iter()
            .position(|&l| self.text(l).trim_start().starts_with(TLDR_MARKER));
        match tldr_at {
            Some(idx) => {
                let line = raw.body[idx];
                let text = self.text(line);
                let start = line.start + (text.len() - text.trim_start().len()) + TLDR_MARKER.len();
                section.tldr_range = line.range();
                section.tldr = self.clean_outside_text(SourceRange::new(start, line.end));
            }
            None => self.warn(DiagnosticCode::MissingTldr, "section has no TLDR; line", anchor),
        }

        let mut block: Vec<Line> = Vec::new();
        let mut blocks: Vec<SourceRange> = Vec::new();
        for (idx, &line) in raw.body.iter().enumerate() {
            if Some(idx) == tldr_at || self.is_blank(line) {
                if let (Some(first), Some(last)) = (block.first(), block.last()) {
                    blocks.push(SourceRange::new(first.start, last.end));
                }
                block.clear();
            } else {
                block.push(line);
            }
        }
        if let (Some(first), Some(last)) = (block.first(), block.last()) {
            blocks.push(SourceRange::new(first.start, last.end));
        }
        for range in blocks {
            let paragraphs = self.paragraphs(range);
            section.paragraphs.extend(paragraphs);
        }
        if section.paragraphs.is_empty() {
            self.warn(DiagnosticCode::EmptySection, "section has no paragraphs", anchor);
        }
        section
    }

    /// Title or TLDR text: tags are dropped, whitespace collapsed.
    fn clean_outside_text(&mut self, range: SourceRange) -> String {
        let tokens = lex(self.raw, range);
        let mut out = String::new();
        for tok in tokens {
            if tok.is_tag() {
                self.warn(
                    DiagnosticCode::TagOutsideBody,
                    "intent tag outside a paragraph is ignored",
                    tok.range,
                );
                out.push(' ');
            } else {
                out.push_str(&self.raw[tok.range.start..tok.range.end]);
            }
        }
        collapse_all(&out)
    }

    fn paragraphs(&mut self, range: SourceRange) -> Vec<Paragraph> {
        let raw = self.raw;
        let tokens = lex(raw, range);
        let mut done = Vec::new();
        let mut para = ParagraphBuilder::new(range.start);
        let mut i = 0;
        while i < tokens.len() {
            let tok = tokens[i];
            match tok.kind {
                TokenKind::Text => {
                    para.text(&raw[tok.range.start..tok.range.end], tok.range, self);
                    i += 1;
                }
                TokenKind::BadIndex => {
                    self.warn(
                        DiagnosticCode::InvalidCitationIndex,
                        "citation index must be a positive 32-bit integer; kept as text",
                        tok.range,
                    );
                    para.text(&raw[tok.range.start..tok.range.end], tok.range, self);
                    i += 1;
                }
                TokenKind::Marker(cite) => {
                    para.part(ClaimPart::Citation(cite), tok.range);
                    i += 1;
                }
                TokenKind::End(category) => {
                    self.warn(
                        DiagnosticCode::StrayEndTag,
                        format!("{} without a matching begin tag", category.end_tag()),
                        tok.range,
                    );
                    para.separator();
                    i += 1;
                }
                TokenKind::Begin(IntentCategory::Citation) => {
                    let (span, next) = self.span(&tokens, i, IntentCategory::Citation);
                    let r = span.source_range;
                    para.part(ClaimPart::Intent(span), r);
                    i = next;
                }
                TokenKind::Begin(IntentCategory::Paragraph) => {
                    if para.has_content() || para.intent.is_some() {
                        let code = if para.has_content() {
                            DiagnosticCode::MisplacedParagraphIntent
                        } else {
                            DiagnosticCode::MultipleParagraphIntents
                        };
                        self.warn(
                            code,
                            "paragraph intent does not open a paragraph; starting a new paragraph",
                            tok.range,
                        );
                        let finished = std::mem::replace(&mut para, ParagraphBuilder::new(tok.range.start));
                        done.extend(finished.finish(self, tok.range.start));
                    }
                    let (span, next) = self.span(&tokens, i, IntentCategory::Paragraph);
                    para.intent = Some(span);
                    i = next;
                }
            }
        }
        done.extend(para.finish(self, range.end));
        done
    }

    /// Reads the intent span opened by `tokens[open]`; returns the span and
    /// the index of the next unread token.
    fn span(
        &mut self,
        tokens: &[Token],
        open: usize,
        category: IntentCategory,
    ) -> (IntentSpan, usize) {
        let begin = tokens[open];
        let mut depth = 1usize;
        let mut close = None;
        for (j, tok) in tokens.iter().enumerate().skip(open + 1) {
            match tok.kind {
                TokenKind::Begin(c) if c == category => depth += 1,
                TokenKind::End(c) if c == category => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(j);
                        break;
                    }
                }
                _ => {}
            }
        }

        let (content_end, next, end) = match close {
            Some(k) => (k, k + 1, tokens[k].range.end),
            None => {
                let stop = tokens[open + 1..]
                    .iter()
                    .position(Token::is_tag)
                    .map_or(tokens.len(), |p| open + 1 + p);
                let end = if stop > open + 1 {
                    tokens[stop - 1].range.end
                } else {
                    begin.range.end
                };
                self.warn(
                    DiagnosticCode::UnclosedTag,
                    format!(
                        "{} is never closed; span ends at the next tag or paragraph end",
                        category.begin_tag()
                    ),
                    SourceRange::new(begin.range.start, end),
                );
                (stop, stop, end)
            }
        };

        let mut content = String::new();
        for tok in &tokens[open + 1..content_end] {
            if tok.is_tag() {
                self.warn(
                    DiagnosticCode::NestedTag,
                    "intent tags cannot nest; inner tag ignored",
                    tok.range,
                );
                content.push(' ');
            } else {
                content.push_str(&self.raw[tok.range.start..tok.range.end]);
            }
        }

        let range = SourceRange::new(begin.range.start, end);
        let (label, rationale) = split_label(&content);
        let raw_label = match label {
            Some(l) if !l.is_empty() => l,
            other => {
                self.warn(
                    DiagnosticCode::MissingIntentLabel,
                    "intent span has no [type] label",
                    range,
                );
                other.unwrap_or_default()
            }
        };
        if rationale.is_empty() {
            self.warn(DiagnosticCode::EmptyRationale, "intent rationale is empty", range);
        }
        let span = IntentSpan {
            intent_type: normalize_intent_label(&raw_label, category),
            rationale,
            source_range: range,
            raw_label,
        };
        (span, next)
    }
}

/// Splits span content into `[label]` and rationale; the label is `None`
/// when the content does not start with a bracketed token.
fn split_label(content: &str) -> (Option<String>, String) {
    let c = content.trim_start();
    let (label, rest) = match c.strip_prefix('[').and_then(|r| r.find(']').map(|i| (r, i))) {
        Some((r, close)) => (Some(collapse_all(&r[..close])), &r[close + 1..]),
        None => (None, c),
    };
    let rest = rest.trim_start();
    let rest = rest.strip_prefix(':').unwrap_or(rest);
    (label, collapse_all(rest))
}

/// Collapses every whitespace run to one space and trims.
pub(crate) fn collapse_all(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Collapses horizontal whitespace to one space and any run containing a
/// newline to a single newline. Leading/trailing whitespace is kept
/// (normalized) so callers decide how to trim.
pub(crate) fn normalize_body_ws(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending: Option<bool> = None; // Some(has_newline)
    for ch in s.chars() {
        if ch.is_whitespace() {
            let nl = ch == '\n';
            pending = Some(pending.unwrap_or(false) || nl);
        } else {
            if let Some(nl) = pending.take() {
                out.push(if nl { '\n' } else { ' ' });
            }
            out.push(ch);
        }
    }
    if let Some(nl) = pending {
        out.push(if nl { '\n' } else { ' ' });
    }
    out
}

struct RunBuilder {
    text: String,
    parts: Vec<ClaimPart>,
    range: SourceRange,
    pending_ws: String,
}

struct ParagraphBuilder {
    start: usize,
    intent: Option<IntentSpan>,
    segments: Vec<Segment>,
    text: String,
    text_start: Option<usize>,
    run: Option<RunBuilder>,
}

impl ParagraphBuilder {
    fn new(start: usize) -> Self {
        ParagraphBuilder {
            start,
            intent: None,
            segments: Vec::new(),
            text: String::new(),
            text_start: None,
            run: None,
        }
    }

    fn has_content(&self) -> bool {
        !self.segments.is_empty() || self.run.is_some() || !self.text.trim().is_empty()
    }

    fn text(&mut self, s: &str, range: SourceRange, parser: &mut Parser<'_>) {
        if let Some(run) = &mut self.run {
            if s.trim().is_empty() {
                run.pending_ws.push_str(s);
                return;
            }
            let run = self.run.take().expect("run present");
            let carried = run.pending_ws.clone();
            self.close_run(run, parser);
            self.text = carried;
        }
        if self.text_start.is_none() {
            self.text_start = Some(range.start);
        }
        self.text.push_str(s);
    }

    /// An elided tag separates words.
    fn separator(&mut self) {
        match &mut self.run {
            Some(run) => run.pending_ws.push(' '),
            None => self.text.push(' '),
        }
    }

    fn part(&mut self, part: ClaimPart, range: SourceRange) {
        match &mut self.run {
            Some(run) => {
                run.pending_ws.clear();
                run.range = run.range.cover(range);
                run.parts.push(part);
            }
            None => {
                let start = self.text_start.take().unwrap_or(range.start);
                self.run = Some(RunBuilder {
                    text: std::mem::take(&mut self.text),
                    parts: vec![part],
                    range: SourceRange::new(start.min(range.start), range.end),
                    pending_ws: String::new(),
                });
            }
        }
    }

    fn close_run(&mut self, run: RunBuilder, parser: &mut Parser<'_>) {
        let mut text = normalize_body_ws(&run.text);
        if self.segments.is_empty() {
            text = text.trim_start().to_string();
        }
        let text = text.trim_end().to_string();
        let has_cite = run.parts.iter().any(|p| matches!(p, ClaimPart::Citation(_)));
        if !has_cite {
            parser.warn(
                DiagnosticCode::DanglingCitationIntent,
                "citation intent is not followed by a citation marker",
                run.range,
            );
        }
        let claim = CitedClaim::new(text, run.parts, run.range)
            .expect("parser only adds citation-category spans to claims");
        self.segments.push(Segment::Claim(claim));
    }

    fn finish(mut self, parser: &mut Parser<'_>, end: usize) -> Option<Paragraph> {
        if let Some(run) = self.run.take() {
            self.close_run(run, parser);
        }
        let mut text = normalize_body_ws(&self.text);
        if self.segments.is_empty() {
            text = text.trim_start().to_string();
        }
        let text = text.trim_end();
        if !text.is_empty() {
            self.segments.push(Segment::PlainText(text.to_string()));
        }
        let paragraph = Paragraph {
            paragraph_intent: self.intent,
            segments: self.segments,
            source_range: SourceRange::new(self.start, end.max(self.start)),
        };
        (!paragraph.is_empty()).then_some(paragraph)
    }
}

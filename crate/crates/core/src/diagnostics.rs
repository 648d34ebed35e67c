use std::fmt;

use serde::{Deserialize, Serialize};

/// Half-open byte range `[start, end)` into a raw document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SourceRange {
    pub start: usize,
    pub end: usize,
}

impl SourceRange {
    pub fn new(start: usize, end: usize) -> Self {
        SourceRange { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn cover(self, other: SourceRange) -> SourceRange {
        SourceRange {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

macro_rules! diagnostic_codes {
    ($($(#[$doc:meta])* $variant:ident => $text:literal, $severity:ident;)*) => {
        /// Closed registry of diagnostic codes. `docs/diagnostics.md` lists
        /// every code with its meaning.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum DiagnosticCode {
            $($(#[$doc])* $variant,)*
        }

        impl DiagnosticCode {
            pub const ALL: &'static [DiagnosticCode] = &[$(DiagnosticCode::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(DiagnosticCode::$variant => $text,)*
                }
            }

            /// Severity a diagnostic with this code is emitted at.
            pub fn severity(self) -> Severity {
                match self {
                    $(DiagnosticCode::$variant => Severity::$severity,)*
                }
            }

            pub fn from_code(code: &str) -> Option<DiagnosticCode> {
                match code {
                    $($text => Some(DiagnosticCode::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

diagnostic_codes! {
    /// Non-blank text before the first `SECTION;` marker.
    PreambleText => "PREAMBLE_TEXT", Warning;
    /// `SECTION;` marker with nothing after it.
    EmptySectionTitle => "EMPTY_SECTION_TITLE", Warning;
    /// Section without a `TLDR;` line.
    MissingTldr => "MISSING_TLDR", Warning;
    /// Section without paragraphs.
    EmptySection => "EMPTY_SECTION", Warning;
    /// Begin tag whose end tag never arrives.
    UnclosedTag => "UNCLOSED_TAG", Warning;
    /// Tag inside an open intent span.
    NestedTag => "NESTED_TAG", Warning;
    /// End tag with no open span.
    StrayEndTag => "STRAY_END_TAG", Warning;
    /// Intent span without a bracketed `[type]` label.
    MissingIntentLabel => "MISSING_INTENT_LABEL", Warning;
    /// Intent span with an empty rationale.
    EmptyRationale => "EMPTY_RATIONALE", Warning;
    /// A second paragraph intent before any paragraph content.
    MultipleParagraphIntents => "MULTIPLE_PARAGRAPH_INTENTS", Warning;
    /// Paragraph intent after paragraph content; a new paragraph is started.
    MisplacedParagraphIntent => "MISPLACED_PARAGRAPH_INTENT", Warning;
    /// Citation intent not followed by any citation marker.
    DanglingCitationIntent => "DANGLING_CITATION_INTENT", Warning;
    /// Intent tag inside a section title or TLDR; the tag is dropped.
    TagOutsideBody => "TAG_OUTSIDE_BODY", Warning;
    /// `[0]` or an index that does not fit; kept as text.
    InvalidCitationIndex => "INVALID_CITATION_INDEX", Warning;
    /// More than five consecutive citations after one claim.
    CiteRunTooLong => "CITE_RUN_TOO_LONG", Warning;
    /// Citation index larger than the candidate set.
    CiteOutOfRange => "CITE_OUT_OF_RANGE", Error;
    /// Citation marker inside a TLDR.
    TldrHasCitation => "TLDR_HAS_CITATION", Warning;
    /// Intent label outside the schema.
    UnknownIntentType => "UNKNOWN_INTENT_TYPE", Warning;
    /// Generated report has no sections even after one retry.
    ParseDegenerate => "PARSE_DEGENERATE", Warning;
    /// Pre-planning response contained no usable score line.
    PreplanMalformed => "PREPLAN_MALFORMED", Error;
    /// Pre-planning line that could not be used.
    PreplanBadLine => "PREPLAN_BAD_LINE", Warning;
    /// Candidate without a pre-planning score; appended in original order.
    PreplanUnscored => "PREPLAN_UNSCORED", Warning;
}

impl fmt::Display for DiagnosticCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for DiagnosticCode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for DiagnosticCode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        DiagnosticCode::from_code(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown diagnostic code `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagnosticCode,
    pub message: String,
    pub source_range: SourceRange,
}

impl Diagnostic {
    pub fn new(code: DiagnosticCode, message: impl Into<String>, source_range: SourceRange) -> Self {
        Diagnostic {
            severity: code.severity(),
            code,
            message: message.into(),
            source_range,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{sev}[{}] {}..{}: {}",
            self.code, self.source_range.start, self.source_range.end, self.message
        )
    }
}

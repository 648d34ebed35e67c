//! Intent-annotated report model, markup parser, prompt templates and the
//! offline data tooling built on them.

pub mod analytics;
pub mod annotation;
pub mod candidates;
pub mod diagnostics;
pub mod intent;
pub mod prompt;
pub mod reader;
pub mod record;
pub mod report;
pub mod sft;
pub mod synth;

pub use diagnostics::{Diagnostic, DiagnosticCode, Severity, SourceRange};
pub use intent::{CitationKind, IntentCategory, IntentType, ParagraphKind};
pub use report::{
    parse_report, serialize_report, strip_intents, validate_report, CitationRef, Report,
    SerializeMode,
};

//! Supervised fine-tuning corpora built from teacher records: four
//! instruction/report views per record, written as chat-style JSONL.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::prompt::{build_generation_prompt, extract_references, PromptError, PromptVariant};
use crate::record::GenerationRecord;
use crate::report::{serialize_report, SerializeMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    Explicit,
    ParagraphOnly,
    CitationOnly,
    NoIntent,
}

impl ViewKind {
    pub const ALL: [ViewKind; 4] = [
        ViewKind::Explicit,
        ViewKind::ParagraphOnly,
        ViewKind::CitationOnly,
        ViewKind::NoIntent,
    ];

    pub fn prompt_variant(self) -> PromptVariant {
        match self {
            ViewKind::Explicit => PromptVariant::BothIntents,
            ViewKind::ParagraphOnly => PromptVariant::ParagraphOnly,
            ViewKind::CitationOnly => PromptVariant::CitationOnly,
            ViewKind::NoIntent => PromptVariant::NoIntent,
        }
    }

    pub fn serialize_mode(self) -> SerializeMode {
        match self {
            ViewKind::Explicit => SerializeMode::Full,
            ViewKind::ParagraphOnly => SerializeMode::ParagraphOnly,
            ViewKind::CitationOnly => SerializeMode::CitationOnly,
            ViewKind::NoIntent => SerializeMode::Stripped,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViewKind::Explicit => "explicit",
            ViewKind::ParagraphOnly => "paragraph_only",
            ViewKind::CitationOnly => "citation_only",
            ViewKind::NoIntent => "no_intent",
        }
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub example_id: String,
    pub query_id: String,
    pub view: ViewKind,
    /// Full user prompt; the rendered quotes sit at the reference slot.
    pub instruction: String,
    /// The `[Citation n] quote` block embedded in `instruction`.
    pub context: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusMode {
    Baseline,
    Implicit,
    Explicit,
    Multiview,
}

impl CorpusMode {
    pub fn views(self) -> &'static [ViewKind] {
        match self {
            CorpusMode::Baseline | CorpusMode::Implicit => &[ViewKind::NoIntent],
            CorpusMode::Explicit => &[ViewKind::Explicit],
            CorpusMode::Multiview => &ViewKind::ALL,
        }
    }

    /// Whether a record generated with `variant` may feed this corpus:
    /// baseline needs no-intent teacher runs, the others intent-aware ones.
    pub fn accepts(self, variant: PromptVariant) -> bool {
        match self {
            CorpusMode::Baseline => variant == PromptVariant::NoIntent,
            _ => variant != PromptVariant::NoIntent,
        }
    }
}

impl FromStr for CorpusMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(CorpusMode::Baseline),
            "implicit" => Ok(CorpusMode::Implicit),
            "explicit" => Ok(CorpusMode::Explicit),
            "multiview" | "multi-view" => Ok(CorpusMode::Multiview),
            other => Err(format!("unknown corpus mode `{other}`")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SftError {
    #[error("DEGENERATE_SOURCE: record {0} has no sections")]
    DegenerateSource(String),
    #[error("cannot rebuild prompt for {query_id}: {source}")]
    Prompt {
        query_id: String,
        source: PromptError,
    },
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Load { line: usize, message: String },
}

/// The four views of one teacher record.
pub fn make_views(record: &GenerationRecord) -> Result<Vec<TrainingExample>, SftError> {
    if record.parsed.sections.is_empty() {
        return Err(SftError::DegenerateSource(record.query_id.clone()));
    }
    ViewKind::ALL
        .iter()
        .map(|&view| {
            let bundle = build_generation_prompt(&record.query, &record.candidates, view.prompt_variant())
                .map_err(|source| SftError::Prompt {
                    query_id: record.query_id.clone(),
                    source,
                })?;
            Ok(TrainingExample {
                example_id: format!("{}:{}", record.query_id, view),
                query_id: record.query_id.clone(),
                view,
                context: context_of(&bundle.user_text),
                instruction: bundle.user_text,
                target: serialize_report(&record.parsed, view.serialize_mode()),
            })
        })
        .collect()
}

fn context_of(instruction: &str) -> String {
    extract_references(instruction)
        .into_iter()
        .map(|(n, text)| format!("[Citation {n}] {text}"))
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Serialize, Deserialize)]
struct Message {
    role: String,
    content: String,
}

#[derive(Serialize, Deserialize)]
struct Line {
    example_id: String,
    view: ViewKind,
    messages: Vec<Message>,
}

/// Writes the examples whose view belongs to `mode`, one JSON object per
/// line. Returns the number written.
pub fn emit_jsonl<W: Write>(
    examples: &[TrainingExample],
    mode: CorpusMode,
    mut out: W,
) -> Result<usize, SftError> {
    let views = mode.views();
    let mut count = 0;
    for ex in examples.iter().filter(|e| views.contains(&e.view)) {
        let line = Line {
            example_id: ex.example_id.clone(),
            view: ex.view,
            messages: vec![
                Message {
                    role: "user".into(),
                    content: ex.instruction.clone(),
                },
                Message {
                    role: "assistant".into(),
                    content: ex.target.clone(),
                },
            ],
        };
        serde_json::to_writer(&mut out, &line).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
        count += 1;
    }
    out.flush()?;
    Ok(count)
}

/// Reads a file written by [`emit_jsonl`] back into examples.
pub fn load_jsonl<R: BufRead>(input: R) -> Result<Vec<TrainingExample>, SftError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| SftError::Load {
            line: i + 1,
            message,
        };
        let parsed: Line = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let [user, assistant] = <[Message; 2]>::try_from(parsed.messages)
            .map_err(|_| err("expected exactly two messages".into()))?;
        if user.role != "user" || assistant.role != "assistant" {
            return Err(err("expected user then assistant messages".into()));
        }
        let query_id = parsed
            .example_id
            .rsplit_once(':')
            .map(|(q, _)| q.to_string())
            .ok_or_else(|| err(format!("example id `{}` has no view suffix", parsed.example_id)))?;
        out.push(TrainingExample {
            example_id: parsed.example_id,
            query_id,
            view: parsed.view,
            context: context_of(&user.content),
            instruction: user.content,
            target: assistant.content,
        });
    }
    Ok(out)
}

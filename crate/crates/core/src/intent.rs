//! Intent categories and types.
//!
//! Citation intents follow the six ACL-ARC functions; paragraph intents
//! follow discourse modes. Labels emitted by a model that do not name one
//! of these types exactly are kept verbatim as [`IntentType::Other`] and end
//! up in the error bucket of the distribution statistics.

use std::fmt;

use serde::{Deserialize, Serialize};

/// The two families of intent tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentCategory {
    Citation,
    Paragraph,
}

impl IntentCategory {
    pub const ALL: [IntentCategory; 2] = [IntentCategory::Citation, IntentCategory::Paragraph];

    /// Label prefix used by the prompt, e.g. `CIT-USES`.
    pub fn label_prefix(self) -> &'static str {
        match self {
            IntentCategory::Citation => "CIT-",
            IntentCategory::Paragraph => "PIT-",
        }
    }

    pub fn begin_tag(self) -> &'static str {
        match self {
            IntentCategory::Citation => "<bcit>",
            IntentCategory::Paragraph => "<bpit>",
        }
    }

    pub fn end_tag(self) -> &'static str {
        match self {
            IntentCategory::Citation => "<ecit>",
            IntentCategory::Paragraph => "<epit>",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntentCategory::Citation => "citation",
            IntentCategory::Paragraph => "paragraph",
        }
    }
}

impl fmt::Display for IntentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IntentCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "citation" | "cit" => Ok(IntentCategory::Citation),
            "paragraph" | "pit" => Ok(IntentCategory::Paragraph),
            other => Err(format!("unknown intent category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CitationKind {
    Background,
    Motivation,
    Uses,
    Extension,
    ComparisonOrContrast,
    Future,
}

impl CitationKind {
    pub const ALL: [CitationKind; 6] = [
        CitationKind::Background,
        CitationKind::Motivation,
        CitationKind::Uses,
        CitationKind::Extension,
        CitationKind::ComparisonOrContrast,
        CitationKind::Future,
    ];

    /// Upper-case name as written in prompt labels (`CIT-<name>`).
    pub fn label_name(self) -> &'static str {
        match self {
            CitationKind::Background => "BACKGROUND",
            CitationKind::Motivation => "MOTIVATION",
            CitationKind::Uses => "USES",
            CitationKind::Extension => "EXTENSION",
            CitationKind::ComparisonOrContrast => "COMPARISON OR CONTRAST",
            CitationKind::Future => "FUTURE",
        }
    }

    /// Row label used in distribution tables.
    pub fn table_label(self) -> &'static str {
        match self {
            CitationKind::Background => "Background",
            CitationKind::Motivation => "Motivation",
            CitationKind::Uses => "Uses",
            CitationKind::Extension => "Extension",
            CitationKind::ComparisonOrContrast => "Comparison",
            CitationKind::Future => "Future",
        }
    }

    pub fn prompt_description(self) -> &'static str {
        match self {
            CitationKind::Background => "the citation provides relevant information for this domain",
            CitationKind::Motivation => "the citation illustrates need for data, goals, methods, etc.",
            CitationKind::Uses => "the sentence uses data, methods, etc. from the citation",
            CitationKind::Extension => {
                "the sentence extends the referenced work's data, methods, etc. of the citation"
            }
            CitationKind::ComparisonOrContrast => {
                "the sentence expresses similarity/differences to the referenced work of the citation"
            }
            CitationKind::Future => {
                "the citation identifies the referenced work as a potential avenue for future work"
            }
        }
    }

    fn key(self) -> &'static str {
        match self {
            CitationKind::Background => "background",
            CitationKind::Motivation => "motivation",
            CitationKind::Uses => "uses",
            CitationKind::Extension => "extension",
            CitationKind::ComparisonOrContrast => "comparisonorcontrast",
            CitationKind::Future => "future",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParagraphKind {
    Exposition,
    Definition,
    Argumentation,
    CompareContrast,
    CauseEffect,
    ProblemSolution,
    Evaluation,
    Narration,
}

impl ParagraphKind {
    pub const ALL: [ParagraphKind; 8] = [
        ParagraphKind::Exposition,
        ParagraphKind::Definition,
        ParagraphKind::Argumentation,
        ParagraphKind::CompareContrast,
        ParagraphKind::CauseEffect,
        ParagraphKind::ProblemSolution,
        ParagraphKind::Evaluation,
        ParagraphKind::Narration,
    ];

    /// Row order of the paragraph distribution table (Narration before Evaluation).
    pub const TABLE_ORDER: [ParagraphKind; 8] = [
        ParagraphKind::Exposition,
        ParagraphKind::Definition,
        ParagraphKind::Argumentation,
        ParagraphKind::CompareContrast,
        ParagraphKind::CauseEffect,
        ParagraphKind::ProblemSolution,
        ParagraphKind::Narration,
        ParagraphKind::Evaluation,
    ];

    /// Name as written in prompt labels (`PIT-<name>`).
    pub fn label_name(self) -> &'static str {
        match self {
            ParagraphKind::Exposition => "Exposition",
            ParagraphKind::Definition => "Definition",
            ParagraphKind::Argumentation => "Argumentation",
            ParagraphKind::CompareContrast => "Compare-Contrast",
            ParagraphKind::CauseEffect => "Cause-Effect",
            ParagraphKind::ProblemSolution => "Problem-Solution",
            ParagraphKind::Evaluation => "Evaluation",
            ParagraphKind::Narration => "Narration",
        }
    }

    pub fn table_label(self) -> &'static str {
        self.label_name()
    }

    pub fn prompt_description(self) -> &'static str {
        match self {
            ParagraphKind::Exposition => "This paragraph's main function is to explain, clarify, or provide background information on a topic (e.g., introducing a concept, summarizing prior work).",
            ParagraphKind::Definition => "This paragraph's primary purpose is to define a key term, concept, or theory, often providing necessary boundaries for its use in the report.",
            ParagraphKind::Argumentation => "This paragraph presents a specific claim or thesis and supports it with evidence, logic, or reasoning to persuade the reader.",
            ParagraphKind::CompareContrast => "This paragraph's structure is organized around highlighting the similarities and/or differences between two or more subjects, theories, or findings.",
            ParagraphKind::CauseEffect => "This paragraph focuses on explaining the causal relationship between events or phenomena, detailing why something happened or what its results were.",
            ParagraphKind::ProblemSolution => "This paragraph identifies a specific problem, gap, or challenge and then proposes or describes a potential solution or response.",
            ParagraphKind::Evaluation => "This paragraph assesses the strengths, weaknesses, validity, or significance of a study, theory, or piece of evidence according to a set of criteria.",
            ParagraphKind::Narration => "This paragraph recounts a sequence of events, such as the historical development of a field, the chronology of a case study, or the steps in a process.",
        }
    }

    fn key(self) -> &'static str {
        match self {
            ParagraphKind::Exposition => "exposition",
            ParagraphKind::Definition => "definition",
            ParagraphKind::Argumentation => "argumentation",
            ParagraphKind::CompareContrast => "comparecontrast",
            ParagraphKind::CauseEffect => "causeeffect",
            ParagraphKind::ProblemSolution => "problemsolution",
            ParagraphKind::Evaluation => "evaluation",
            ParagraphKind::Narration => "narration",
        }
    }
}

/// A normalized intent type. The category is carried by the variant, so a
/// citation value can never hold a paragraph kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IntentType {
    Citation(CitationKind),
    Paragraph(ParagraphKind),
    /// A label outside the schema, preserved verbatim.
    Other { category: IntentCategory, raw: String },
}

impl IntentType {
    pub fn category(&self) -> IntentCategory {
        match self {
            IntentType::Citation(_) => IntentCategory::Citation,
            IntentType::Paragraph(_) => IntentCategory::Paragraph,
            IntentType::Other { category, .. } => *category,
        }
    }

    pub fn is_other(&self) -> bool {
        matches!(self, IntentType::Other { .. })
    }

    /// Stable snake-case key of the kind (`other` for unknown labels).
    pub fn kind_key(&self) -> &'static str {
        match self {
            IntentType::Citation(k) => match k {
                CitationKind::Background => "background",
                CitationKind::Motivation => "motivation",
                CitationKind::Uses => "uses",
                CitationKind::Extension => "extension",
                CitationKind::ComparisonOrContrast => "comparison_or_contrast",
                CitationKind::Future => "future",
            },
            IntentType::Paragraph(k) => match k {
                ParagraphKind::Exposition => "exposition",
                ParagraphKind::Definition => "definition",
                ParagraphKind::Argumentation => "argumentation",
                ParagraphKind::CompareContrast => "compare_contrast",
                ParagraphKind::CauseEffect => "cause_effect",
                ParagraphKind::ProblemSolution => "problem_solution",
                ParagraphKind::Evaluation => "evaluation",
                ParagraphKind::Narration => "narration",
            },
            IntentType::Other { .. } => "other",
        }
    }

    /// Inverse of [`IntentType::kind_key`]; `raw` is only used for `other`.
    pub fn from_kind_key(category: IntentCategory, key: &str, raw: &str) -> Option<IntentType> {
        if key == "other" {
            return Some(IntentType::Other {
                category,
                raw: raw.to_string(),
            });
        }
        match category {
            IntentCategory::Citation => CitationKind::ALL
                .into_iter()
                .map(IntentType::Citation)
                .find(|t| t.kind_key() == key),
            IntentCategory::Paragraph => ParagraphKind::ALL
                .into_iter()
                .map(IntentType::Paragraph)
                .find(|t| t.kind_key() == key),
        }
    }

    /// Canonical label for this type, e.g. `CIT-USES` or `PIT-Exposition`.
    pub fn canonical_label(&self) -> String {
        match self {
            IntentType::Citation(k) => format!("CIT-{}", k.label_name()),
            IntentType::Paragraph(k) => format!("PIT-{}", k.label_name()),
            IntentType::Other { raw, .. } => raw.clone(),
        }
    }
}

/// Maps a bracketed label (without brackets) onto the schema.
///
/// Matching is case-insensitive, ignores an optional category prefix
/// (`CIT-`/`PIT-`) and an optional trailing colon, and treats spaces,
/// hyphens and underscores inside the name as equivalent. The full type
/// name must match; partial names such as `comparison` are `Other`.
pub fn normalize_intent_label(raw_label: &str, category: IntentCategory) -> IntentType {
    let other = || IntentType::Other {
        category,
        raw: raw_label.to_string(),
    };
    let mut label = raw_label.trim();
    if let Some(stripped) = label.strip_suffix(':') {
        label = stripped.trim_end();
    }
    let lowered = label.to_lowercase();
    let prefix = category.label_prefix().to_ascii_lowercase();
    let name = lowered.strip_prefix(prefix.as_str()).unwrap_or(&lowered);
    let key: String = name
        .chars()
        .filter(|c| !matches!(c, ' ' | '-' | '_' | '\t'))
        .collect();
    if key.is_empty() {
        return other();
    }
    match category {
        IntentCategory::Citation => CitationKind::ALL
            .into_iter()
            .find(|k| k.key() == key)
            .map(IntentType::Citation)
            .unwrap_or_else(other),
        IntentCategory::Paragraph => ParagraphKind::ALL
            .into_iter()
            .find(|k| k.key() == key)
            .map(IntentType::Paragraph)
            .unwrap_or_else(other),
    }
}

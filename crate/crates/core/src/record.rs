//! One generated report together with everything needed to reproduce or
//! re-derive it.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::candidates::SnippetCandidate;
use crate::diagnostics::Diagnostic;
use crate::prompt::{PreplanScore, PromptVariant};
use crate::report::{parse_report, Report};

/// Generation settings captured at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub model: String,
    pub base_url: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub preplan: bool,
    pub template_version: String,
}

/// What the pre-planning stage saw and did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreplanTrace {
    pub raw_response: String,
    pub scores: Vec<PreplanScore>,
    /// Paper ids in retrieval order, before reranking.
    pub original_order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub query_id: String,
    pub query: String,
    pub variant: PromptVariant,
    /// Path or id of the frozen candidate set this run drew from.
    pub candidate_set_ref: String,
    /// Candidates in prompt order, numbered as the model saw them.
    pub candidates: Vec<SnippetCandidate>,
    pub raw_report: String,
    pub parsed: Report,
    pub diagnostics: Vec<Diagnostic>,
    pub config: ConfigSnapshot,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preplan: Option<PreplanTrace>,
    #[serde(default)]
    pub request_ids: Vec<String>,
}

impl GenerationRecord {
    /// True when `parsed` is exactly what parsing `raw_report` gives.
    pub fn is_consistent(&self) -> bool {
        parse_report(&self.raw_report) == self.parsed
    }
}

//! Query to parsed report: candidates, optional pre-planning, prompt,
//! completion, parse and validation.

use std::sync::Arc;

use chrono::Utc;
use intentmark_core::candidates::renumber;
use intentmark_core::diagnostics::{Diagnostic, DiagnosticCode, SourceRange};
use intentmark_core::prompt::{
    apply_preplan_ranking, build_generation_prompt_with, build_preplan_prompt, parse_preplan_scores,
    PromptError, PromptVariant, TypeRanking, TEMPLATE_VERSION,
};
use intentmark_core::record::{ConfigSnapshot, GenerationRecord, PreplanTrace};
use intentmark_core::report::{parse_report, validate_report};

use crate::gateway::{CompletionBackend, GatewayError};
use crate::retrieval::{CandidateSource, RetrievalError};

#[derive(Debug, Clone, Default)]
pub struct PipelineOptions {
    pub preplan: bool,
    pub ranking: TypeRanking,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("retrieval: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("gateway: {0}")]
    Gateway(#[from] GatewayError),
    #[error("prompt: {0}")]
    Prompt(#[from] PromptError),
}

#[derive(Clone)]
pub struct Pipeline {
    backend: Arc<dyn CompletionBackend>,
    source: Arc<dyn CandidateSource>,
    options: PipelineOptions,
}

impl Pipeline {
    pub fn new(backend: Arc<dyn CompletionBackend>, source: Arc<dyn CandidateSource>, options: PipelineOptions) -> Self {
        Pipeline {
            backend,
            source,
            options,
        }
    }

    pub fn backend(&self) -> &dyn CompletionBackend {
        self.backend.as_ref()
    }

    pub fn snapshot(&self) -> ConfigSnapshot {
        ConfigSnapshot {
            model: self.backend.model_name().to_string(),
            base_url: self.backend.base_url().to_string(),
            temperature: self.backend.temperature(),
            max_output_tokens: self.backend.max_output_tokens(),
            preplan: self.options.preplan,
            template_version: TEMPLATE_VERSION.to_string(),
        }
    }

    /// Runs the whole chain for one query. A reply with no section is
    /// requested once more before being kept with `PARSE_DEGENERATE`.
    pub async fn generate_report(&self, query: &str, variant: PromptVariant) -> Result<GenerationRecord, PipelineError> {
        let set = self.source.assemble(query).await?;
        let mut candidates = set.candidates.clone();
        let mut diagnostics: Vec<Diagnostic> = Vec::new();
        let mut request_ids = Vec::new();
        let mut preplan = None;

        if self.options.preplan && !candidates.is_empty() {
            let prompt = build_preplan_prompt(query, &candidates)?;
            let rec = self.backend.complete(&prompt).await?;
            request_ids.push(rec.request_id.clone());
            let parsed = parse_preplan_scores(&rec.response_text);
            let (ranked, rank_diags) = apply_preplan_ranking(&candidates, &parsed.scores);
            diagnostics.extend(parsed.diagnostics);
            diagnostics.extend(rank_diags.into_iter().filter(|d| {
                // Already reported by the parser.
                !(d.code == DiagnosticCode::PreplanMalformed && parsed.scores.is_empty())
            }));
            preplan = Some(PreplanTrace {
                raw_response: rec.response_text,
                scores: parsed.scores,
                original_order: candidates.iter().map(|c| c.paper_id.clone()).collect(),
            });
            candidates = ranked;
            renumber(&mut candidates);
        }

        let prompt = build_generation_prompt_with(query, &candidates, variant, &self.options.ranking)?;
        let mut rec = self.backend.complete(&prompt).await?;
        request_ids.push(rec.request_id.clone());
        let mut parsed = parse_report(&rec.response_text);
        if parsed.sections.is_empty() {
            rec = self.backend.complete(&prompt).await?;
            request_ids.push(rec.request_id.clone());
            parsed = parse_report(&rec.response_text);
        }
        let mut all = validate_report(&parsed, candidates.len());
        if parsed.sections.is_empty() {
            all.push(Diagnostic::new(
                DiagnosticCode::ParseDegenerate,
                "reply has no section after one retry",
                SourceRange::new(0, rec.response_text.len()),
            ));
        }
        all.extend(diagnostics);

        Ok(GenerationRecord {
            query_id: set.query_id.clone(),
            query: query.trim().to_string(),
            variant,
            candidate_set_ref: format!("{}.json", set.query_id),
            candidates,
            raw_report: rec.response_text,
            parsed,
            diagnostics: all,
            config: self.snapshot(),
            created_at: Utc::now(),
            preplan,
            request_ids,
        })
    }
}

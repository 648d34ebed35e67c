#![allow(dead_code)]

pub mod oracle;

use chrono::DateTime;
use intentmark_core::candidates::{query_id, SnippetCandidate};
use intentmark_core::prompt::PromptVariant;
use intentmark_core::record::{ConfigSnapshot, GenerationRecord};
use intentmark_core::synth::{synth_candidates, synth_report, SynthConfig};
use intentmark_core::{parse_report, validate_report};
use rand::Rng;

/// The worked example from the appendix prompt, verbatim.
pub const APPENDIX: &str = "<bpit>[PIT-Exposition] This paragraph provides background context by introducing Convolutional Neural Networks (CNNs) and stating their established success in image classification, setting the stage for the subsequent discussion. <epit> Convolutional neural networks (CNNs) have achieved state-of-the-art results in image classification <bcit>[CIT-BACKGROUND]: these citations provides foundational context linking CNN to major image classification tasks <ecit> [1] [2]. They have become a foundational tool...";

pub fn record(query: &str, raw: &str, variant: PromptVariant, candidates: Vec<SnippetCandidate>) -> GenerationRecord {
    let parsed = parse_report(raw);
    let mut diagnostics = parsed.diagnostics.clone();
    diagnostics.extend(validate_report(&parsed, candidates.len()));
    GenerationRecord {
        query_id: query_id(query),
        query: query.to_string(),
        variant,
        candidate_set_ref: format!("{}.json", query_id(query)),
        candidates,
        raw_report: raw.to_string(),
        parsed,
        diagnostics,
        config: ConfigSnapshot {
            model: "teacher".into(),
            base_url: "http://localhost/v1".into(),
            temperature: 1.0,
            max_output_tokens: 22_000,
            preplan: false,
            template_version: "v1".into(),
        },
        created_at: DateTime::UNIX_EPOCH,
        preplan: None,
        request_ids: vec![],
    }
}

/// A teacher record over a synthetic report whose markers stay inside the
/// candidate range.
pub fn synth_record<R: Rng>(rng: &mut R, i: usize) -> GenerationRecord {
    let n = rng.random_range(3..=12);
    let cfg = SynthConfig {
        candidates: n,
        ..SynthConfig::default()
    };
    let text = synth_report(rng, &cfg).text;
    let cands = synth_candidates(rng, n);
    record(&format!("synthetic query {i}"), &text, PromptVariant::BothIntents, cands)
}

#![allow(dead_code)]

use std::path::Path;

use intentmark_core::candidates::{query_id, SnippetCandidate};
use intentmark_core::prompt::{PromptVariant, TEMPLATE_VERSION};
use intentmark_core::record::{ConfigSnapshot, GenerationRecord};
use intentmark_core::report::{parse_report, validate_report};

pub const APPENDIX: &str = "SECTION; Background\nTLDR; CNNs are a standard tool for images.\n\n<bpit>[PIT-Exposition] This paragraph provides background context by introducing Convolutional Neural Networks (CNNs) and stating their established success in image classification, setting the stage for the subsequent discussion. <epit> Convolutional neural networks (CNNs) have achieved state-of-the-art results in image classification <bcit>[CIT-BACKGROUND]: these citations provides foundational context linking CNN to major image classification tasks <ecit> [1] [2]. They have become a foundational tool...\n";

pub const PLAIN: &str = "SECTION; Overview\nTLDR; A plain summary.\n\nCNNs work well on images [1]. Later work refined them [2] [3].\n\nA second paragraph without citations.\n";

pub fn candidates(n: u32) -> Vec<SnippetCandidate> {
    (1..=n)
        .map(|i| SnippetCandidate {
            index: i,
            paper_id: format!("P{i}"),
            title: format!("Paper {i}"),
            snippet: format!("Quote from paper {i}."),
            salient: None,
            citation_count: u64::from(10 - i),
        })
        .collect()
}

pub fn record(query: &str, raw: &str, variant: PromptVariant, n: u32) -> GenerationRecord {
    let parsed = parse_report(raw);
    GenerationRecord {
        query_id: query_id(query),
        query: query.to_string(),
        variant,
        candidate_set_ref: format!("{}.json", query_id(query)),
        candidates: candidates(n),
        raw_report: raw.to_string(),
        diagnostics: validate_report(&parsed, n as usize),
        parsed,
        config: ConfigSnapshot {
            model: "fixture".into(),
            base_url: String::new(),
            temperature: 1.0,
            max_output_tokens: 22_000,
            preplan: false,
            template_version: TEMPLATE_VERSION.into(),
        },
        created_at: chrono::DateTime::UNIX_EPOCH,
        preplan: None,
        request_ids: Vec::new(),
    }
}

pub fn write_corpus(dir: &Path, records: &[GenerationRecord]) {
    let rd = dir.join("records");
    std::fs::create_dir_all(&rd).unwrap();
    for r in records {
        std::fs::write(rd.join(format!("{}.json", r.query_id)), serde_json::to_vec_pretty(r).unwrap()).unwrap();
    }
}

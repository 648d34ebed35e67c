#![no_main]

use intentmark_core::candidates::SnippetCandidate;
use intentmark_core::prompt::{build_generation_prompt, extract_references, PromptVariant};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|input: (String, Vec<String>, u8)| {
    let (query, snippets, v) = input;
    let candidates: Vec<SnippetCandidate> = snippets
        .into_iter()
        .take(20)
        .enumerate()
        .map(|(i, snippet)| SnippetCandidate {
            index: i as u32 + 1,
            paper_id: format!("p{i}"),
            title: String::new(),
            snippet,
            salient: None,
            citation_count: 0,
        })
        .collect();
    let variant = match v % 5 {
        0 => PromptVariant::BothIntents,
        1 => PromptVariant::CitationOnly,
        2 => PromptVariant::ParagraphOnly,
        3 => PromptVariant::NoIntent,
        _ => PromptVariant::mixed(),
    };
    if let Ok(bundle) = build_generation_prompt(&query, &candidates, variant) {
        let refs = extract_references(&bundle.user_text);
        assert!(refs.keys().all(|k| (1..=candidates.len() as u32).contains(k)));
    }
});

mod support;

use std::collections::BTreeMap;

use intentmark_core::analytics::{
    candidate_usage_of, citation_coverage, intent_distribution, row_labels, Aggregation,
};
use intentmark_core::candidates::{check_candidates, merge_records, renumber, PaperRecord, SnippetRecord};
use intentmark_core::intent::normalize_intent_label;
use intentmark_core::prompt::{build_generation_prompt, PromptVariant};
use intentmark_core::report::canonical_whitespace;
use intentmark_core::sft::{emit_jsonl, load_jsonl, make_views, CorpusMode, ViewKind};
use intentmark_core::synth::{add_noise, synth_candidates, synth_report, SynthConfig};
use intentmark_core::{
    parse_report, serialize_report, strip_intents, CitationRef, IntentCategory, Report, SerializeMode,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::oracle::{oracle_parse, oracle_row};
use support::synth_record;

const TAGS: [&str; 4] = ["<bpit>", "<epit>", "<bcit>", "<ecit>"];

fn synth(seed: u64) -> String {
    synth_report(&mut ChaCha8Rng::seed_from_u64(seed), &SynthConfig::default()).text
}

fn spans(r: &Report) -> Vec<(IntentCategory, String, String)> {
    let mut v: Vec<_> = r
        .intent_spans()
        .map(|s| (s.category(), s.raw_label.clone(), s.rationale.clone()))
        .collect();
    v.sort();
    v
}

fn cites(r: &Report) -> Vec<CitationRef> {
    r.citations().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn round_trip_is_stable(seed in any::<u64>()) {
        let text = synth(seed);
        let r = parse_report(&text);
        let once = serialize_report(&r, SerializeMode::Full);
        prop_assert_eq!(&once, &text);
        let again = parse_report(&once);
        prop_assert!(again.structurally_eq(&r));
        prop_assert_eq!(serialize_report(&again, SerializeMode::Full), once);
    }

    #[test]
    fn parser_agrees_with_oracle(seed in any::<u64>()) {
        let text = synth(seed);
        let r = parse_report(&text);
        let o = oracle_parse(&text);
        prop_assert_eq!(r.sections.len(), o.sections);
        prop_assert_eq!(r.paragraphs().count(), o.paragraphs);
        let pl: Vec<_> = r.spans_of(IntentCategory::Paragraph).map(|s| s.raw_label.clone()).collect();
        let cl: Vec<_> = r.spans_of(IntentCategory::Citation).map(|s| s.raw_label.clone()).collect();
        prop_assert_eq!(pl, o.paragraph_labels);
        prop_assert_eq!(cl, o.citation_labels);
        let got: Vec<Option<u32>> = r.citations().map(|c| c.candidate_index().map(|i| i.get())).collect();
        prop_assert_eq!(got, o.citations);
    }

    #[test]
    fn stripped_output_has_no_tags(seed in any::<u64>()) {
        let text = synth(seed);
        let stripped = serialize_report(&parse_report(&text), SerializeMode::Stripped);
        for t in TAGS {
            prop_assert!(!stripped.contains(t));
        }
        let s1 = strip_intents(&text);
        prop_assert_eq!(strip_intents(&s1), s1.clone());
        for t in TAGS {
            prop_assert!(!s1.contains(t));
        }
    }

    #[test]
    fn strip_is_idempotent_on_noise(seed in any::<u64>(), edits in 0usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noisy = add_noise(&mut rng, &synth(seed), edits);
        let s1 = strip_intents(&noisy);
        prop_assert_eq!(strip_intents(&s1), s1);
    }

    #[test]
    fn modes_partition_spans(seed in any::<u64>()) {
        let r = parse_report(&synth(seed));
        let full = spans(&parse_report(&serialize_report(&r, SerializeMode::Full)));
        let mut both = spans(&parse_report(&serialize_report(&r, SerializeMode::ParagraphOnly)));
        both.extend(spans(&parse_report(&serialize_report(&r, SerializeMode::CitationOnly))));
        both.sort();
        prop_assert_eq!(both, full);
    }

    #[test]
    fn citations_survive_every_mode(seed in any::<u64>()) {
        let r = parse_report(&synth(seed));
        let expect = cites(&r);
        for mode in SerializeMode::ALL {
            prop_assert_eq!(cites(&parse_report(&serialize_report(&r, mode))), expect.clone(), "{:?}", mode);
        }
    }

    #[test]
    fn parser_is_total_on_noise(seed in any::<u64>(), edits in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noisy = add_noise(&mut rng, &synth(seed), edits);
        let r = parse_report(&noisy);
        for s in r.intent_spans() {
            prop_assert!(s.source_range.start < s.source_range.end);
            prop_assert!(s.source_range.end <= noisy.len());
        }
        let _ = serialize_report(&r, SerializeMode::Full);
    }

    #[test]
    fn parser_is_total_on_arbitrary_text(text in "(\\PC|<bpit>|<epit>|<bcit>|<ecit>|\\[[0-9]{1,3}\\]|SECTION;|TLDR;|\n){0,60}") {
        let r = parse_report(&text);
        for s in r.intent_spans() {
            prop_assert!(s.source_range.start < s.source_range.end);
            prop_assert!(s.source_range.end <= text.len());
        }
        for d in &r.diagnostics {
            prop_assert!(d.source_range.end <= text.len());
        }
    }

    #[test]
    fn labels_normalize_purely_and_by_category(raw in "(CIT-|PIT-|cit |)(BACKGROUND|Uses|Exposition|Problem-Solution|Compare Contrast|future|[A-Za-z -]{0,12}):?") {
        for category in [IntentCategory::Citation, IntentCategory::Paragraph] {
            let a = normalize_intent_label(&raw, category);
            prop_assert_eq!(&a, &normalize_intent_label(&raw, category));
            prop_assert_eq!(a.category(), category);
            let expect_known = oracle_row(&raw, category == IntentCategory::Citation).is_some();
            prop_assert_eq!(!a.is_other(), expect_known, "{}", raw);
        }
    }

    #[test]
    fn usage_and_coverage_are_fractions(a in any::<u64>(), b in any::<u64>(), n in 1usize..20) {
        let x = parse_report(&synth(a));
        let y = parse_report(&synth(b));
        let u = candidate_usage_of(&x, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&u));
        let c = citation_coverage(&x, &y).fraction;
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn duplicate_citations_change_nothing(a in any::<u64>(), b in any::<u64>()) {
        let text = synth(a);
        let x = parse_report(&text);
        let y = parse_report(&synth(b));
        let Some(first) = x.cited_candidates().into_iter().next() else {
            return Ok(());
        };
        let dup = text.replacen(&format!("[{}]", first.get()), &format!("[{0}] [{0}]", first.get()), 1);
        let x2 = parse_report(&dup);
        prop_assert_eq!(cites(&x2).len(), cites(&x).len() + 1);
        for n in [1, 5, 12] {
            prop_assert_eq!(candidate_usage_of(&x2, n).unwrap(), candidate_usage_of(&x, n).unwrap());
        }
        prop_assert_eq!(citation_coverage(&x2, &y), citation_coverage(&x, &y));
        prop_assert_eq!(citation_coverage(&y, &x2), citation_coverage(&y, &x));
    }

    #[test]
    fn distribution_totals_and_shares(seeds in prop::collection::vec(any::<u64>(), 1..8), macro_agg in any::<bool>()) {
        let reports: Vec<Report> = seeds.iter().map(|s| parse_report(&synth(*s))).collect();
        let agg = if macro_agg { Aggregation::Macro } else { Aggregation::Micro };
        for category in [IntentCategory::Citation, IntentCategory::Paragraph] {
            let d = intent_distribution(&reports, category, agg);
            let spans: usize = reports.iter().map(|r| r.spans_of(category).count()).sum();
            prop_assert_eq!(d.total as usize, spans);
            prop_assert_eq!(d.rows.iter().map(|r| r.count).sum::<u64>(), d.total);
            let labels: Vec<&str> = d.rows.iter().map(|r| r.label.as_str()).collect();
            prop_assert_eq!(labels, row_labels(category));
            if d.total > 0 {
                let sum: f64 = d.rows.iter().map(|r| r.percentage.unwrap()).sum();
                prop_assert!((sum - 100.0).abs() <= 0.1, "{}", sum);
            }
        }
    }

    #[test]
    fn views_follow_the_tag_matrix(seed in any::<u64>()) {
        let rec = synth_record(&mut ChaCha8Rng::seed_from_u64(seed), 0);
        let views = make_views(&rec).unwrap();
        prop_assert_eq!(views.len(), 4);
        let expect = cites(&rec.parsed);
        for v in &views {
            let (p, c) = match v.view {
                ViewKind::Explicit => (true, true),
                ViewKind::ParagraphOnly => (true, false),
                ViewKind::CitationOnly => (false, true),
                ViewKind::NoIntent => (false, false),
            };
            let has_p = rec.parsed.spans_of(IntentCategory::Paragraph).next().is_some();
            let has_c = rec.parsed.spans_of(IntentCategory::Citation).next().is_some();
            prop_assert_eq!(v.target.contains("<bpit>"), p && has_p);
            prop_assert_eq!(v.target.contains("<bcit>"), c && has_c);
            prop_assert_eq!(v.instruction.contains("<bpit>"), p);
            prop_assert_eq!(v.instruction.contains("<bcit>"), c);
            prop_assert_eq!(cites(&parse_report(&v.target)), expect.clone());
        }
    }

    #[test]
    fn jsonl_round_trips(seeds in prop::collection::vec(any::<u64>(), 0..6)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.iter().fold(1, |a, b| a ^ b));
        let examples: Vec<_> = seeds
            .iter()
            .enumerate()
            .flat_map(|(i, _)| make_views(&synth_record(&mut rng, i)).unwrap())
            .collect();
        let mut buf = Vec::new();
        prop_assert_eq!(emit_jsonl(&examples, CorpusMode::Multiview, &mut buf).unwrap(), examples.len());
        prop_assert_eq!(buf.iter().filter(|b| **b == b'\n').count(), examples.len());
        prop_assert_eq!(load_jsonl(buf.as_slice()).unwrap(), examples);
    }

    #[test]
    fn candidate_sets_are_contiguous_and_deduplicated(
        keyword in prop::collection::vec((0u8..20, 0u64..50, prop::option::of("[a-z]{0,6}")), 0..25),
        snippets in prop::collection::vec((0u8..20, 0u64..50, "[a-z ]{0,8}"), 0..25),
    ) {
        let keyword: Vec<PaperRecord> = keyword
            .into_iter()
            .map(|(id, cc, abs)| PaperRecord {
                paper_id: format!("p{id}"),
                title: format!("Title {id}"),
                abstract_text: abs,
                citation_count: cc,
            })
            .collect();
        let snippets: Vec<SnippetRecord> = snippets
            .into_iter()
            .map(|(id, cc, text)| SnippetRecord {
                paper_id: format!("p{id}"),
                title: format!("Title {id}"),
                text,
                citation_count: cc,
            })
            .collect();
        let mut merged = merge_records(&keyword, &snippets);
        prop_assert!(check_candidates(&merged).is_ok());
        for (i, c) in merged.iter().enumerate() {
            prop_assert_eq!(c.index as usize, i + 1);
        }
        let ids: std::collections::BTreeSet<_> = merged.iter().map(|c| c.paper_id.clone()).collect();
        prop_assert_eq!(ids.len(), merged.len());
        merged.reverse();
        renumber(&mut merged);
        prop_assert!(check_candidates(&merged).is_ok());
    }

    #[test]
    fn prompts_are_deterministic_and_sound(seed in any::<u64>(), n in 1u32..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cands = synth_candidates(&mut rng, n);
        for variant in [
            PromptVariant::BothIntents,
            PromptVariant::CitationOnly,
            PromptVariant::ParagraphOnly,
            PromptVariant::NoIntent,
            PromptVariant::mixed(),
        ] {
            let a = build_generation_prompt("what is new in sparse retrieval", &cands, variant).unwrap();
            prop_assert_eq!(&a, &build_generation_prompt("what is new in sparse retrieval", &cands, variant).unwrap());
            let t = &a.user_text;
            match variant {
                PromptVariant::NoIntent => prop_assert!(TAGS.iter().all(|g| !t.contains(g))),
                PromptVariant::CitationOnly => prop_assert!(!t.contains("<bpit>")),
                PromptVariant::ParagraphOnly => prop_assert!(!t.contains("<bcit>")),
                _ => {}
            }
            let mut last = 0;
            for i in 1..=n {
                let key = format!("[Citation {i}] ");
                prop_assert_eq!(t.matches(&key).count(), 1, "{}", key);
                let at = t.find(&key).unwrap();
                prop_assert!(at > last);
                last = at;
            }
        }
    }
}

#[test]
fn canonical_whitespace_is_idempotent() {
    for seed in 0..50 {
        let s = canonical_whitespace(&synth(seed));
        assert_eq!(canonical_whitespace(&s), s);
    }
}

#[test]
fn mixed_ranking_matches_published_means() {
    // Per-model shares from the published distribution table.
    let citation: BTreeMap<&str, [f64; 3]> = BTreeMap::from([
        ("Background", [28.2, 29.6, 21.1]),
        ("Motivation", [10.6, 7.1, 6.8]),
        ("Uses", [40.4, 55.9, 47.4]),
        ("Extension", [6.9, 0.7, 12.8]),
        ("Comparison", [4.7, 4.8, 3.8]),
        ("Future", [4.2, 0.9, 2.8]),
    ]);
    let paragraph: BTreeMap<&str, [f64; 3]> = BTreeMap::from([
        ("Exposition", [41.5, 51.5, 39.9]),
        ("Definition", [7.0, 7.1, 7.3]),
        ("Argumentation", [11.6, 8.6, 5.1]),
        ("Compare-Contrast", [6.4, 6.1, 9.7]),
        ("Cause-Effect", [6.1, 2.6, 5.4]),
        ("Problem-Solution", [14.5, 13.4, 22.8]),
        ("Narration", [2.7, 5.2, 1.3]),
        ("Evaluation", [9.6, 5.4, 8.5]),
    ]);
    fn by_mean(m: &BTreeMap<&'static str, [f64; 3]>) -> Vec<&'static str> {
        let mut v: Vec<_> = m.iter().map(|(k, x)| (*k, x.iter().sum::<f64>() / 3.0)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v.into_iter().map(|(k, _)| k).collect()
    }
    let ranking = intentmark_core::prompt::TypeRanking::default();
    let got_c: Vec<_> = ranking.citation.iter().map(|k| k.table_label()).collect();
    let got_p: Vec<_> = ranking.paragraph.iter().map(|k| k.table_label()).collect();
    assert_eq!(got_c, by_mean(&citation));
    assert_eq!(got_p, by_mean(&paragraph));
}

//! Seeded generator of well-formed reports in canonical form, with the
//! ground truth each one was built from. Used by tests, benchmarks and
//! fuzz seeding; never by the production pipeline.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::candidates::SnippetCandidate;
use crate::intent::{CitationKind, IntentCategory, IntentType, ParagraphKind};
use crate::report::CitationRef;

const WORDS: [&str; 24] = [
    "models", "retrieval", "graph", "attention", "data", "training", "evaluation", "robust",
    "sparse", "language", "vision", "benchmark", "transfer", "learning", "noise", "signal",
    "scaling", "memory", "inference", "latency", "accuracy", "method", "results", "tasks",
];

const ODD_LABELS: [&str; 4] = ["CIT-SUPPORT", "Summary", "PIT-Overview", "comparison"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub max_sections: usize,
    pub max_paragraphs: usize,
    pub max_claims: usize,
    /// Highest candidate number a marker may use.
    pub candidates: u32,
    /// Chance that a span label is outside the schema.
    pub odd_label_rate: f64,
    pub llm_memory_rate: f64,
    pub paragraph_intent_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_sections: 4,
            max_paragraphs: 3,
            max_claims: 3,
            candidates: 12,
            odd_label_rate: 0.1,
            llm_memory_rate: 0.05,
            paragraph_intent_rate: 0.85,
        }
    }
}

/// A generated report and what went into it, in document order.
#[derive(Debug, Clone, Default)]
pub struct SynthReport {
    pub text: String,
    pub sections: usize,
    pub paragraphs: usize,
    pub paragraph_intents: Vec<IntentType>,
    pub citation_intents: Vec<IntentType>,
    pub citations: Vec<CitationRef>,
}

impl SynthReport {
    pub fn intents(&self, category: IntentCategory) -> &[IntentType] {
        match category {
            IntentCategory::Citation => &self.citation_intents,
            IntentCategory::Paragraph => &self.paragraph_intents,
        }
    }
}

fn words<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> String {
    let n = rng.random_range(lo..=hi);
    (0..n)
        .map(|_| *WORDS.choose(rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn capitalized<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> String {
    let w = words(rng, lo, hi);
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => w,
    }
}

fn label<R: Rng>(rng: &mut R, cfg: &SynthConfig, category: IntentCategory) -> (String, IntentType) {
    if rng.random_bool(cfg.odd_label_rate) {
        let raw = ODD_LABELS.choose(rng).expect("non-empty").to_string();
        return (
            raw.clone(),
            IntentType::Other {
                category,
                raw,
            },
        );
    }
    match category {
        IntentCategory::Citation => {
            let k = *CitationKind::ALL.choose(rng).expect("non-empty");
            (format!("CIT-{}", k.label_name()), IntentType::Citation(k))
        }
        IntentCategory::Paragraph => {
            let k = *ParagraphKind::ALL.choose(rng).expect("non-empty");
            (format!("PIT-{}", k.label_name()), IntentType::Paragraph(k))
        }
    }
}

fn span<R: Rng>(rng: &mut R, cfg: &SynthConfig, category: IntentCategory) -> (String, IntentType) {
    let (label, ty) = label(rng, cfg, category);
    let text = if rng.random_bool(0.05) {
        format!("{}[{label}]: {}", category.begin_tag(), category.end_tag())
    } else {
        format!(
            "{}[{label}]: {} {}",
            category.begin_tag(),
            words(rng, 2, 9),
            category.end_tag()
        )
    };
    (text, ty)
}

/// Generates one report. `serialize_report(parse_report(text), Full)`
/// reproduces `text` byte for byte.
pub fn synth_report<R: Rng>(rng: &mut R, cfg: &SynthConfig) -> SynthReport {
    let mut out = SynthReport::default();
    let mut blocks = Vec::new();
    let n_sections = rng.random_range(1..=cfg.max_sections.max(1));
    for _ in 0..n_sections {
        out.sections += 1;
        blocks.push(format!(
            "SECTION; {}\nTLDR; {}.",
            capitalized(rng, 1, 3),
            capitalized(rng, 4, 10)
        ));
        for _ in 0..rng.random_range(1..=cfg.max_paragraphs.max(1)) {
            out.paragraphs += 1;
            let mut p = String::new();
            if rng.random_bool(cfg.paragraph_intent_rate) {
                let (text, ty) = span(rng, cfg, IntentCategory::Paragraph);
                out.paragraph_intents.push(ty);
                p.push_str(&text);
                p.push(' ');
            }
            for c in 0..rng.random_range(1..=cfg.max_claims.max(1)) {
                if c > 0 {
                    p.push_str(match rng.random_range(0..3) {
                        0 => ". ",
                        1 => ", and ",
                        _ => ".\n- ",
                    });
                }
                p.push_str(&capitalized(rng, 2, 8));
                let n_cites = rng.random_range(1..=4);
                for _ in 0..n_cites {
                    if rng.random_bool(0.7) {
                        let (text, ty) = span(rng, cfg, IntentCategory::Citation);
                        out.citation_intents.push(ty);
                        p.push(' ');
                        p.push_str(&text);
                    }
                    let cite = if rng.random_bool(cfg.llm_memory_rate) {
                        CitationRef::LlmMemory
                    } else {
                        CitationRef::candidate(rng.random_range(1..=cfg.candidates.max(1)))
                            .expect("non-zero")
                    };
                    out.citations.push(cite);
                    p.push(' ');
                    p.push_str(&cite.marker());
                }
            }
            p.push('.');
            blocks.push(p);
        }
    }
    out.text = blocks.join("\n\n");
    out.text.push('\n');
    out
}

/// Candidates numbered 1..=n with distinct paper ids.
pub fn synth_candidates<R: Rng>(rng: &mut R, n: u32) -> Vec<SnippetCandidate> {
    (1..=n)
        .map(|i| SnippetCandidate {
            index: i,
            paper_id: format!("{}", 1000 + i),
            title: capitalized(rng, 2, 6),
            snippet: format!("{}.", capitalized(rng, 10, 40)),
            salient: None,
            citation_count: rng.random_range(0..500),
        })
        .collect()
}

const NOISE: [&str; 14] = [
    "<bcit>", "<ecit>", "<bpit>", "<epit>", "[1]", "[0]", "[Citation 7]", "[LLM MEMORY | 2025]",
    "\n\n", "\nSECTION; X\n", "\nTLDR; y\n", "[", "]:", " ",
];

/// Inserts up to `edits` random tag literals, markers and line breaks at
/// character boundaries of `text`.
pub fn add_noise<R: Rng>(rng: &mut R, text: &str, edits: usize) -> String {
    let mut s = text.to_string();
    for _ in 0..rng.random_range(0..=edits) {
        let boundaries: Vec<usize> = (0..=s.len()).filter(|&i| s.is_char_boundary(i)).collect();
        let at = *boundaries.choose(rng).expect("non-empty");
        s.insert_str(at, NOISE.choose(rng).expect("non-empty"));
    }
    s
}

//! Prompt texts for report generation, salience extraction and pre-planning.
//!
//! Templates are versioned text assets under `templates/v1/`. Rendering is
//! pure: identical inputs give byte-identical bundles.

mod preplan;
mod template;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::candidates::SnippetCandidate;
use crate::intent::{CitationKind, ParagraphKind};

pub use preplan::{apply_preplan_ranking, parse_preplan_scores, PreplanParse, PreplanScore};
pub use template::TemplateError;

pub const TEMPLATE_VERSION: &str = "v1";

const GENERATION_TEMPLATE: &str = include_str!("../../templates/v1/generation.txt");
const PREPLAN_TEMPLATE: &str = include_str!("../../templates/v1/preplan.txt");
const SALIENCE_TEMPLATE: &str = include_str!("../../templates/v1/salience.txt");

/// Default length cap, in characters, asked of salience extracts.
pub const DEFAULT_SALIENT_MAX_CHARS: usize = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PromptVariant {
    BothIntents,
    CitationOnly,
    ParagraphOnly,
    NoIntent,
    MixedSchema { top_k: usize },
}

impl PromptVariant {
    pub const DEFAULT_TOP_K: usize = 3;

    pub fn mixed() -> PromptVariant {
        PromptVariant::MixedSchema {
            top_k: Self::DEFAULT_TOP_K,
        }
    }

    pub fn asks_citation_intents(self) -> bool {
        matches!(
            self,
            PromptVariant::BothIntents | PromptVariant::CitationOnly | PromptVariant::MixedSchema { .. }
        )
    }

    pub fn asks_paragraph_intents(self) -> bool {
        matches!(
            self,
            PromptVariant::BothIntents | PromptVariant::ParagraphOnly | PromptVariant::MixedSchema { .. }
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            PromptVariant::BothIntents => "both",
            PromptVariant::CitationOnly => "citation-only",
            PromptVariant::ParagraphOnly => "paragraph-only",
            PromptVariant::NoIntent => "no-intent",
            PromptVariant::MixedSchema { .. } => "mixed",
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PromptVariant::MixedSchema { top_k } if *top_k != Self::DEFAULT_TOP_K => {
                write!(f, "mixed:{top_k}")
            }
            v => f.write_str(v.name()),
        }
    }
}

impl FromStr for PromptVariant {
    type Err = String;

    /// Accepts `both`, `citation-only`, `paragraph-only`, `no-intent`,
    /// `mixed` and `mixed:K`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase().replace('_', "-");
        if let Some(k) = s.strip_prefix("mixed:") {
            let top_k = k.parse().map_err(|_| format!("bad top_k `{k}`"))?;
            if top_k == 0 {
                return Err("top_k must be at least 1".into());
            }
            return Ok(PromptVariant::MixedSchema { top_k });
        }
        match s.as_str() {
            "both" | "both-intents" | "intent" => Ok(PromptVariant::BothIntents),
            "citation-only" | "citation" => Ok(PromptVariant::CitationOnly),
            "paragraph-only" | "paragraph" => Ok(PromptVariant::ParagraphOnly),
            "no-intent" | "none" => Ok(PromptVariant::NoIntent),
            "mixed" | "mixed-schema" => Ok(PromptVariant::mixed()),
            other => Err(format!("unknown prompt variant `{other}`")),
        }
    }
}

/// Type frequency ranking used by the mixed-schema variant, most used first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeRanking {
    pub citation: Vec<CitationKind>,
    pub paragraph: Vec<ParagraphKind>,
}

impl Default for TypeRanking {
    /// Mean share across the generating models in the published
    /// distribution table.
    fn default() -> Self {
        TypeRanking {
            citation: vec![
                CitationKind::Uses,
                CitationKind::Background,
                CitationKind::Motivation,
                CitationKind::Extension,
                CitationKind::ComparisonOrContrast,
                CitationKind::Future,
            ],
            paragraph: vec![
                ParagraphKind::Exposition,
                ParagraphKind::ProblemSolution,
                ParagraphKind::Argumentation,
                ParagraphKind::Evaluation,
                ParagraphKind::CompareContrast,
                ParagraphKind::Definition,
                ParagraphKind::CauseEffect,
                ParagraphKind::Narration,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_text: Option<String>,
    pub user_text: String,
    /// Citation key number to paper id.
    #[serde(default)]
    pub candidate_numbering: BTreeMap<u32, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("EMPTY_QUERY: the query is blank")]
    EmptyQuery,
    #[error("EMPTY_CANDIDATES: no candidates to plan over")]
    EmptyCandidates,
    #[error("EMPTY_SNIPPET: nothing to extract from")]
    EmptySnippet,
    #[error("candidate at position {position} has index {index}; expected 1..N in list order")]
    Numbering { position: usize, index: u32 },
    #[error("template error: {0}")]
    Template(#[from] TemplateError),
}

/// Builds the report-generation prompt for `variant`.
pub fn build_generation_prompt(
    query: &str,
    candidates: &[SnippetCandidate],
    variant: PromptVariant,
) -> Result<PromptBundle, PromptError> {
    build_generation_prompt_with(query, candidates, variant, &TypeRanking::default())
}

/// As [`build_generation_prompt`], with an explicit ranking for the mixed
/// schema.
pub fn build_generation_prompt_with(
    query: &str,
    candidates: &[SnippetCandidate],
    variant: PromptVariant,
    ranking: &TypeRanking,
) -> Result<PromptBundle, PromptError> {
    let query = checked_query(query)?;
    check_numbering(candidates)?;
    let cit = variant.asks_citation_intents();
    let pit = variant.asks_paragraph_intents();
    let mixed = matches!(variant, PromptVariant::MixedSchema { .. });
    let mut flags = HashSet::new();
    for (on, name) in [
        (cit, "cit"),
        (pit, "pit"),
        (cit || pit, "any"),
        (cit && pit, "both"),
        (cit && !pit, "citonly"),
        (pit && !cit, "paraonly"),
        (mixed, "mixed"),
    ] {
        if on {
            flags.insert(name);
        }
    }
    let (citation_kinds, paragraph_kinds) = match variant {
        PromptVariant::MixedSchema { top_k } => (
            schema_order(&CitationKind::ALL, &ranking.citation, top_k),
            schema_order(&ParagraphKind::ALL, &ranking.paragraph, top_k),
        ),
        _ => (CitationKind::ALL.to_vec(), ParagraphKind::ALL.to_vec()),
    };
    let vars = HashMap::from([
        ("query", query),
        ("section_references", render_references(candidates)),
        ("citation_types", citation_type_list(&citation_kinds)),
        ("paragraph_types", paragraph_type_list(&paragraph_kinds)),
    ]);
    Ok(PromptBundle {
        system_text: None,
        user_text: template::render(GENERATION_TEMPLATE, &flags, &vars)?,
        candidate_numbering: numbering(candidates),
    })
}

/// Asks for one `n | TYPE | score` line per candidate.
pub fn build_preplan_prompt(
    query: &str,
    candidates: &[SnippetCandidate],
) -> Result<PromptBundle, PromptError> {
    let query = checked_query(query)?;
    if candidates.is_empty() {
        return Err(PromptError::EmptyCandidates);
    }
    check_numbering(candidates)?;
    let types = CitationKind::ALL
        .iter()
        .map(|k| format!("- {}: {}", k.label_name(), k.prompt_description()))
        .collect::<Vec<_>>()
        .join("\n");
    let slots = candidates
        .iter()
        .map(|c| format!("{} |", c.index))
        .collect::<Vec<_>>()
        .join("\n");
    let vars = HashMap::from([
        ("query", query),
        ("citation_types", types),
        ("section_references", render_references(candidates)),
        ("slot_count", candidates.len().to_string()),
        ("slots", slots),
    ]);
    Ok(PromptBundle {
        system_text: None,
        user_text: template::render(PREPLAN_TEMPLATE, &HashSet::new(), &vars)?,
        candidate_numbering: numbering(candidates),
    })
}

/// Asks for a verbatim, query-relevant extract of `snippet` of at most
/// `max_chars` characters.
pub fn build_salience_prompt(
    query: &str,
    snippet: &str,
    max_chars: usize,
) -> Result<PromptBundle, PromptError> {
    if snippet.trim().is_empty() {
        return Err(PromptError::EmptySnippet);
    }
    let vars = HashMap::from([
        ("query", query.trim().to_string()),
        ("snippet", snippet.trim().to_string()),
        ("max_chars", max_chars.to_string()),
    ]);
    Ok(PromptBundle {
        system_text: None,
        user_text: template::render(SALIENCE_TEMPLATE, &HashSet::new(), &vars)?,
        candidate_numbering: BTreeMap::new(),
    })
}

/// Pulls the `[Citation n] text` lines back out of a rendered prompt,
/// keyed by n.
pub fn extract_references(user_text: &str) -> BTreeMap<u32, String> {
    user_text
        .lines()
        .filter_map(|line| {
            let rest = line.strip_prefix("[Citation ")?;
            let close = rest.find(']')?;
            let n = rest[..close].parse().ok()?;
            Some((n, rest[close + 1..].trim_start().to_string()))
        })
        .collect()
}

fn checked_query(query: &str) -> Result<String, PromptError> {
    let query = query.trim();
    if query.is_empty() {
        return Err(PromptError::EmptyQuery);
    }
    Ok(neutralize_keys(query))
}

fn check_numbering(candidates: &[SnippetCandidate]) -> Result<(), PromptError> {
    for (position, c) in candidates.iter().enumerate() {
        if c.index as usize != position + 1 {
            return Err(PromptError::Numbering {
                position,
                index: c.index,
            });
        }
    }
    Ok(())
}

fn numbering(candidates: &[SnippetCandidate]) -> BTreeMap<u32, String> {
    candidates
        .iter()
        .map(|c| (c.index, c.paper_id.clone()))
        .collect()
}

/// Lowercases `[Citation` inside free text so user-supplied content can
/// never forge a reference key.
fn neutralize_keys(text: &str) -> String {
    text.replace("[Citation", "[citation")
}

fn render_references(candidates: &[SnippetCandidate]) -> String {
    candidates
        .iter()
        .map(|c| {
            let quote = c.quote().split_whitespace().collect::<Vec<_>>().join(" ");
            format!("[Citation {}] {}", c.index, neutralize_keys(&quote))
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// The first `top_k` entries of `ranking`, listed in schema order.
fn schema_order<T: Copy + PartialEq>(all: &[T], ranking: &[T], top_k: usize) -> Vec<T> {
    let chosen: Vec<T> = ranking.iter().copied().take(top_k).collect();
    all.iter().copied().filter(|k| chosen.contains(k)).collect()
}

fn citation_type_list(kinds: &[CitationKind]) -> String {
    let last = kinds.len().saturating_sub(1);
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let end = if i == last { "." } else { ";" };
            format!("    ({}) CIT-{}: {}{end}", i + 1, k.label_name(), k.prompt_description())
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn paragraph_type_list(kinds: &[ParagraphKind]) -> String {
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| format!("    ({}) PIT-{}: {}", i + 1, k.label_name(), k.prompt_description()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::TAG_LITERALS;

    fn cands(n: u32) -> Vec<SnippetCandidate> {
        (1..=n)
            .map(|i| SnippetCandidate {
                index: i,
                paper_id: format!("p{i}"),
                title: format!("Paper {i}"),
                snippet: format!("snippet number {i}\nwith a break"),
                salient: None,
                citation_count: 10,
            })
            .collect()
    }

    fn gen(v: PromptVariant) -> String {
        build_generation_prompt("How do CNNs work?", &cands(3), v)
            .unwrap()
            .user_text
    }

    #[test]
    fn both_intents_has_everything() {
        let t = gen(PromptVariant::BothIntents);
        for lit in TAG_LITERALS {
            assert!(t.contains(lit), "{lit}");
        }
        for k in CitationKind::ALL {
            assert!(t.contains(k.prompt_description()));
            assert!(t.contains(&format!("CIT-{}", k.label_name())));
        }
        for k in ParagraphKind::ALL {
            assert!(t.contains(k.prompt_description()));
        }
        assert!(t.contains("(6) CIT-FUTURE: the citation identifies the referenced work as a potential avenue for future work."));
        assert!(t.contains("(1) CIT-BACKGROUND: the citation provides relevant information for this domain;"));
        assert!(t.contains("- Remember to include both citation intents (<bcit> and <ecit>) and paragraph intents (<bpit> and <epit>) in your answer."));
        assert!(t.contains("\n[Citation 2] snippet number 2 with a break\n"));
    }

    #[test]
    fn no_intent_is_scrubbed() {
        let t = gen(PromptVariant::NoIntent);
        for lit in TAG_LITERALS {
            assert!(!t.contains(lit));
        }
        assert!(!t.to_lowercase().contains("intent"), "{t}");
        assert!(t.contains("[LLM MEMORY | 2025]"));
        assert!(t.contains("SECTION;"));
    }

    #[test]
    fn single_category_variants() {
        let c = gen(PromptVariant::CitationOnly);
        assert!(c.contains("<bcit>") && !c.contains("<bpit>") && !c.contains("<epit>"));
        assert!(!c.contains("PIT-"));
        let p = gen(PromptVariant::ParagraphOnly);
        assert!(p.contains("<bpit>") && !p.contains("<bcit>") && !p.contains("<ecit>"));
        assert!(!p.contains("CIT-"));
    }

    #[test]
    fn mixed_lists_top_k_and_improvises() {
        let t = gen(PromptVariant::mixed());
        for k in [CitationKind::Background, CitationKind::Uses, CitationKind::Motivation] {
            assert!(t.contains(k.prompt_description()));
        }
        for k in [CitationKind::Extension, CitationKind::ComparisonOrContrast, CitationKind::Future] {
            assert!(!t.contains(k.prompt_description()));
        }
        for k in [ParagraphKind::Exposition, ParagraphKind::ProblemSolution, ParagraphKind::Argumentation] {
            assert!(t.contains(k.prompt_description()));
        }
        assert!(!t.contains(ParagraphKind::Narration.prompt_description()));
        assert_eq!(t.matches("improvise a new type").count(), 2);
        let one = build_generation_prompt("q", &cands(1), PromptVariant::MixedSchema { top_k: 1 })
            .unwrap()
            .user_text;
        assert!(one.contains("(1) CIT-USES") && !one.contains("(2) CIT-"));
    }

    #[test]
    fn candidate_keys_once_in_order() {
        for v in [PromptVariant::BothIntents, PromptVariant::NoIntent, PromptVariant::mixed()] {
            let t = gen(v);
            let mut last = 0;
            for i in 1..=3 {
                let key = format!("[Citation {i}]");
                assert_eq!(t.matches(&key).count(), 1);
                let at = t.find(&key).unwrap();
                assert!(at > last);
                last = at;
            }
        }
    }

    #[test]
    fn forged_keys_are_neutralized() {
        let mut c = cands(2);
        c[0].snippet = "see [Citation 2] for details".into();
        let b = build_generation_prompt("compare [Citation 1]", &c, PromptVariant::BothIntents).unwrap();
        assert_eq!(b.user_text.matches("[Citation 1]").count(), 1);
        assert_eq!(b.user_text.matches("[Citation 2]").count(), 1);
        let refs = extract_references(&b.user_text);
        assert_eq!(refs.len(), 2);
        assert_eq!(refs[&1], "see [citation 2] for details");
    }

    #[test]
    fn errors() {
        assert_eq!(
            build_generation_prompt("  ", &cands(1), PromptVariant::BothIntents),
            Err(PromptError::EmptyQuery)
        );
        assert_eq!(build_preplan_prompt("q", &[]), Err(PromptError::EmptyCandidates));
        assert_eq!(build_salience_prompt("q", " ", 10), Err(PromptError::EmptySnippet));
        let mut c = cands(2);
        c[1].index = 7;
        assert!(matches!(
            build_generation_prompt("q", &c, PromptVariant::BothIntents),
            Err(PromptError::Numbering { .. })
        ));
    }

    #[test]
    fn preplan_slots_and_format() {
        let t = build_preplan_prompt("q?", &cands(5)).unwrap().user_text;
        for i in 1..=5 {
            let slot = format!("{i} |");
            assert_eq!(t.lines().filter(|l| *l == slot).count(), 1);
        }
        assert_eq!(t.matches("n | TYPE | score").count(), 1);
        assert!(t.contains("Fill in these 5 lines:"));
    }

    #[test]
    fn salience_contains_inputs_once() {
        let t = build_salience_prompt("graph neural nets", "A long passage about GNN pooling.", 300)
            .unwrap()
            .user_text;
        assert_eq!(t.matches("graph neural nets").count(), 1);
        assert_eq!(t.matches("A long passage about GNN pooling.").count(), 1);
        assert!(t.contains("at most 300 characters"));
    }

    #[test]
    fn variant_parsing_round_trips() {
        for v in [
            PromptVariant::BothIntents,
            PromptVariant::CitationOnly,
            PromptVariant::ParagraphOnly,
            PromptVariant::NoIntent,
            PromptVariant::mixed(),
            PromptVariant::MixedSchema { top_k: 5 },
        ] {
            assert_eq!(v.to_string().parse::<PromptVariant>().unwrap(), v);
        }
        assert!("mixed:0".parse::<PromptVariant>().is_err());
    }
}

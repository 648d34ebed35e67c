//! Retrieved evidence: the numbered candidates a report may cite, the merge
//! rules that turn raw search results into a candidate set, and the frozen
//! on-disk cache format.

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Joins multiple snippets retrieved for the same paper.
pub const SNIPPET_JOINER: &str = " ... ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetCandidate {
    pub index: u32,
    pub paper_id: String,
    pub title: String,
    pub snippet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salient: Option<String>,
    pub citation_count: u64,
}

impl SnippetCandidate {
    /// Text shown to the model: the salient extract when present.
    pub fn quote(&self) -> &str {
        self.salient.as_deref().unwrap_or(&self.snippet)
    }
}

/// Where a candidate set came from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub service: String,
    pub keyword_limit: usize,
    pub snippet_limit: usize,
    pub salience_threshold: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salience_model: Option<String>,
    #[serde(default)]
    pub keyword_hits: usize,
    #[serde(default)]
    pub snippet_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub query_id: String,
    pub query: String,
    pub candidates: Vec<SnippetCandidate>,
    pub frozen_at: DateTime<Utc>,
    pub source: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CandidateSetError {
    #[error("candidate at position {position} has index {index}")]
    IndexGap { position: usize, index: u32 },
    #[error("paper {0} appears more than once")]
    DuplicatePaper(String),
    #[error("candidate {0} has an empty or oversized salient extract")]
    BadSalient(u32),
}

impl CandidateSet {
    /// Checks index contiguity, paper uniqueness and salient bounds.
    pub fn check(&self) -> Result<(), CandidateSetError> {
        check_candidates(&self.candidates)
    }

    pub fn get(&self, index: u32) -> Option<&SnippetCandidate> {
        let pos = index.checked_sub(1)? as usize;
        self.candidates.get(pos).filter(|c| c.index == index)
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Index to paper id.
    pub fn numbering(&self) -> BTreeMap<u32, String> {
        self.candidates
            .iter()
            .map(|c| (c.index, c.paper_id.clone()))
            .collect()
    }
}

pub fn check_candidates(candidates: &[SnippetCandidate]) -> Result<(), CandidateSetError> {
    let mut seen = HashSet::new();
    for (pos, c) in candidates.iter().enumerate() {
        if c.index as usize != pos + 1 {
            return Err(CandidateSetError::IndexGap {
                position: pos,
                index: c.index,
            });
        }
        if !seen.insert(c.paper_id.as_str()) {
            return Err(CandidateSetError::DuplicatePaper(c.paper_id.clone()));
        }
        if let Some(s) = &c.salient {
            if s.is_empty() || s.chars().count() > c.snippet.chars().count() {
                return Err(CandidateSetError::BadSalient(c.index));
            }
        }
    }
    Ok(())
}

/// Reassigns indices 1..N in list order.
pub fn renumber(candidates: &mut [SnippetCandidate]) {
    for (i, c) in candidates.iter_mut().enumerate() {
        c.index = i as u32 + 1;
    }
}

/// Stable identifier of a query: truncated SHA-256 of the trimmed text.
pub fn query_id(query: &str) -> String {
    let digest = Sha256::digest(query.trim().as_bytes());
    hex::encode(&digest[..8])
}

/// One hit of a keyword paper search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    pub citation_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abstract_text: Option<String>,
}

/// One hit of a snippet search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetRecord {
    pub paper_id: String,
    pub title: String,
    pub text: String,
    pub citation_count: u64,
}

/// Merges keyword and snippet hits into candidates, one per paper.
///
/// Snippets of the same paper are joined in arrival order (exact repeats
/// dropped); a paper with no snippet falls back to its abstract and is
/// skipped when it has neither. Citation count is the maximum seen. The
/// result is ordered by citation count descending, then paper id, and
/// numbered from 1. `salient` is left empty.
pub fn merge_records(keyword: &[PaperRecord], snippets: &[SnippetRecord]) -> Vec<SnippetCandidate> {
    struct Acc {
        title: String,
        texts: Vec<String>,
        abstract_text: Option<String>,
        citation_count: u64,
    }
    let mut by_paper: HashMap<&str, Acc> = HashMap::new();
    for s in snippets {
        let acc = by_paper.entry(s.paper_id.as_str()).or_insert_with(|| Acc {
            title: String::new(),
            texts: Vec::new(),
            abstract_text: None,
            citation_count: 0,
        });
        if acc.title.is_empty() {
            acc.title = s.title.trim().to_string();
        }
        acc.citation_count = acc.citation_count.max(s.citation_count);
        let text = collapse(&s.text);
        if !text.is_empty() && !acc.texts.contains(&text) {
            acc.texts.push(text);
        }
    }
    for k in keyword {
        let acc = by_paper.entry(k.paper_id.as_str()).or_insert_with(|| Acc {
            title: String::new(),
            texts: Vec::new(),
            abstract_text: None,
            citation_count: 0,
        });
        if acc.title.is_empty() {
            acc.title = k.title.trim().to_string();
        }
        acc.citation_count = acc.citation_count.max(k.citation_count);
        if acc.abstract_text.is_none() {
            acc.abstract_text = k
                .abstract_text
                .as_deref()
                .map(collapse)
                .filter(|a| !a.is_empty());
        }
    }
    let mut out: Vec<SnippetCandidate> = by_paper
        .into_iter()
        .filter(|(id, _)| !id.is_empty())
        .filter_map(|(id, acc)| {
            let snippet = if acc.texts.is_empty() {
                acc.abstract_text?
            } else {
                acc.texts.join(SNIPPET_JOINER)
            };
            Some(SnippetCandidate {
                index: 0,
                paper_id: id.to_string(),
                title: acc.title,
                snippet,
                salient: None,
                citation_count: acc.citation_count,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.citation_count
            .cmp(&a.citation_count)
            .then_with(|| a.paper_id.cmp(&b.paper_id))
    });
    renumber(&mut out);
    out
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    checksum: String,
    candidate_set: CandidateSet,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache file is not valid JSON: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("cache checksum mismatch (stored {stored}, computed {computed})")]
    ChecksumMismatch { stored: String, computed: String },
    #[error("cached candidate set is inconsistent: {0}")]
    Inconsistent(#[from] CandidateSetError),
}

fn checksum(set: &CandidateSet) -> String {
    let body = serde_json::to_vec(set).expect("candidate set serialization cannot fail");
    hex::encode(Sha256::digest(&body))
}

/// Serializes a frozen set together with its checksum.
pub fn encode_cache(set: &CandidateSet) -> String {
    let file = CacheFile {
        checksum: checksum(set),
        candidate_set: set.clone(),
    };
    serde_json::to_string_pretty(&file).expect("candidate set serialization cannot fail")
}

/// Parses a cache file, rejecting it when the checksum or the set
/// invariants do not hold.
pub fn decode_cache(text: &str) -> Result<CandidateSet, CacheError> {
    let file: CacheFile = serde_json::from_str(text)?;
    let computed = checksum(&file.candidate_set);
    if computed != file.checksum {
        return Err(CacheError::ChecksumMismatch {
            stored: file.checksum,
            computed,
        });
    }
    file.candidate_set.check()?;
    Ok(file.candidate_set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snip(id: &str, text: &str, count: u64) -> SnippetRecord {
        SnippetRecord {
            paper_id: id.into(),
            title: format!("T{id}"),
            text: text.into(),
            citation_count: count,
        }
    }

    fn paper(id: &str, count: u64, abs: Option<&str>) -> PaperRecord {
        PaperRecord {
            paper_id: id.into(),
            title: format!("T{id}"),
            citation_count: count,
            abstract_text: abs.map(Into::into),
        }
    }

    fn sample_set() -> CandidateSet {
        CandidateSet {
            query_id: query_id("q"),
            query: "q".into(),
            candidates: merge_records(
                &[paper("b", 5, Some("abs b"))],
                &[snip("a", "one", 3), snip("a", "two", 9)],
            ),
            frozen_at: DateTime::parse_from_rfc3339("2025-01-02T03:04:05.123456789Z")
                .unwrap()
                .with_timezone(&Utc),
            source: Provenance::default(),
        }
    }

    #[test]
    fn merge_dedups_and_orders() {
        let out = merge_records(
            &[paper("b", 5, Some("abs b")), paper("c", 5, None), paper("a", 1, Some("abs a"))],
            &[snip("a", "one", 3), snip("a", " two\n", 9), snip("a", "one", 3)],
        );
        let ids: Vec<_> = out.iter().map(|c| c.paper_id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(out[0].snippet, "one ... two");
        assert_eq!(out[0].citation_count, 9);
        assert_eq!(out[1].snippet, "abs b");
        assert!(check_candidates(&out).is_ok());
    }

    #[test]
    fn ties_break_by_paper_id() {
        let out = merge_records(&[], &[snip("z", "x", 2), snip("m", "y", 2)]);
        assert_eq!(out[0].paper_id, "m");
        assert_eq!(out[1].index, 2);
    }

    #[test]
    fn cache_round_trip_is_byte_identical() {
        let set = sample_set();
        let text = encode_cache(&set);
        let back = decode_cache(&text).unwrap();
        assert_eq!(back, set);
        assert_eq!(encode_cache(&back), text);
    }

    #[test]
    fn tampered_cache_is_rejected() {
        let text = encode_cache(&sample_set()).replace("abs b", "abs c");
        assert!(matches!(decode_cache(&text), Err(CacheError::ChecksumMismatch { .. })));
        assert!(matches!(decode_cache("nope"), Err(CacheError::Malformed(_))));
    }

    #[test]
    fn query_id_ignores_outer_whitespace() {
        assert_eq!(query_id(" what is RAG? "), query_id("what is RAG?"));
        assert_eq!(query_id("x").len(), 16);
    }

    #[test]
    fn check_rejects_bad_sets() {
        let mut set = sample_set();
        set.candidates[1].index = 5;
        assert!(matches!(set.check(), Err(CandidateSetError::IndexGap { .. })));
        let mut set = sample_set();
        set.candidates[0].salient = Some(String::new());
        assert!(matches!(set.check(), Err(CandidateSetError::BadSalient(1))));
    }
}

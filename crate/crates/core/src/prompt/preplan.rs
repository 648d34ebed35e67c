//! The pre-planning line protocol: `n | TYPE | score`, one line per
//! candidate, score in [0, 1].

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::candidates::SnippetCandidate;
use crate::diagnostics::{Diagnostic, DiagnosticCode, SourceRange};
use crate::intent::{normalize_intent_label, IntentCategory, IntentType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreplanScore {
    pub index: u32,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intent: Option<String>,
}

impl PreplanScore {
    pub fn new(index: u32, score: f64) -> Self {
        PreplanScore {
            index,
            score,
            intent: None,
        }
    }

    pub fn intent_type(&self) -> Option<IntentType> {
        self.intent
            .as_deref()
            .map(|l| normalize_intent_label(l, IntentCategory::Citation))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreplanParse {
    pub scores: Vec<PreplanScore>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Reads every `n | TYPE | score` line out of a model reply. Lines without
/// a `|` are treated as chatter and skipped; lines with one that do not
/// parse, and repeated indices, produce `PREPLAN_BAD_LINE`. A reply with no
/// usable line at all produces `PREPLAN_MALFORMED`.
pub fn parse_preplan_scores(text: &str) -> PreplanParse {
    let mut out = PreplanParse::default();
    let mut seen = HashSet::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let range = SourceRange::new(offset, offset + line.trim_end().len());
        offset += line.len();
        if !line.contains('|') {
            continue;
        }
        match parse_line(line) {
            Some(score) if seen.insert(score.index) => out.scores.push(score),
            Some(score) => out.diagnostics.push(Diagnostic::new(
                DiagnosticCode::PreplanBadLine,
                format!("candidate {} scored more than once; first score kept", score.index),
                range,
            )),
            None => out.diagnostics.push(Diagnostic::new(
                DiagnosticCode::PreplanBadLine,
                format!("unreadable score line `{}`", line.trim()),
                range,
            )),
        }
    }
    if out.scores.is_empty() {
        out.diagnostics.push(Diagnostic::new(
            DiagnosticCode::PreplanMalformed,
            "no `n | TYPE | score` line found",
            SourceRange::new(0, text.len()),
        ));
    }
    out
}

fn parse_line(line: &str) -> Option<PreplanScore> {
    let line = line
        .trim()
        .trim_start_matches(['-', '*', '`'])
        .trim_end_matches('`')
        .trim();
    let mut parts = line.split('|').map(str::trim);
    let (n, ty, score) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    let n = n
        .strip_prefix("[Citation")
        .and_then(|r| r.strip_suffix(']'))
        .or_else(|| n.strip_prefix('[').and_then(|r| r.strip_suffix(']')))
        .unwrap_or(n)
        .trim();
    let index: u32 = n.parse().ok().filter(|i| *i > 0)?;
    let score: f64 = score.parse().ok()?;
    if !(0.0..=1.0).contains(&score) {
        return None;
    }
    Some(PreplanScore {
        index,
        score,
        intent: (!ty.is_empty()).then(|| ty.to_string()),
    })
}

/// Reorders candidates by descending score. Ties and unscored candidates
/// keep their original relative order; unscored ones go last. Candidate
/// `index` fields are left untouched so callers can see the original
/// numbering. With no scores at all the input order is returned.
pub fn apply_preplan_ranking(
    candidates: &[SnippetCandidate],
    scores: &[PreplanScore],
) -> (Vec<SnippetCandidate>, Vec<Diagnostic>) {
    let mut diagnostics = Vec::new();
    if scores.is_empty() {
        diagnostics.push(Diagnostic::new(
            DiagnosticCode::PreplanMalformed,
            "no scores; keeping retrieval order",
            SourceRange::default(),
        ));
        return (candidates.to_vec(), diagnostics);
    }
    let mut score_of: Vec<Option<f64>> = vec![None; candidates.len()];
    for s in scores {
        match candidates.iter().position(|c| c.index == s.index) {
            Some(pos) if score_of[pos].is_none() => score_of[pos] = Some(s.score),
            Some(_) => {}
            None => diagnostics.push(Diagnostic::new(
                DiagnosticCode::PreplanBadLine,
                format!("score for unknown candidate {}", s.index),
                SourceRange::default(),
            )),
        }
    }
    let mut scored: Vec<(usize, f64)> = Vec::new();
    let mut unscored: Vec<usize> = Vec::new();
    for (pos, s) in score_of.iter().enumerate() {
        match s {
            Some(s) => scored.push((pos, *s)),
            None => unscored.push(pos),
        }
    }
    // Stable sort keeps original order among equal scores.
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    if !unscored.is_empty() {
        let ids: Vec<String> = unscored
            .iter()
            .map(|&p| candidates[p].index.to_string())
            .collect();
        diagnostics.push(Diagnostic::new(
            DiagnosticCode::PreplanUnscored,
            format!("no score for candidates {}; appended in original order", ids.join(", ")),
            SourceRange::default(),
        ));
    }
    let order = scored.into_iter().map(|(p, _)| p).chain(unscored);
    (order.map(|p| candidates[p].clone()).collect(), diagnostics)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(ids: &[&str]) -> Vec<SnippetCandidate> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| SnippetCandidate {
                index: i as u32 + 1,
                paper_id: id.to_string(),
                title: String::new(),
                snippet: "s".into(),
                salient: None,
                citation_count: 0,
            })
            .collect()
    }

    fn ids(c: &[SnippetCandidate]) -> Vec<&str> {
        c.iter().map(|c| c.paper_id.as_str()).collect()
    }

    #[test]
    fn descending_order() {
        let scores = [PreplanScore::new(1, 0.2), PreplanScore::new(2, 0.9), PreplanScore::new(3, 0.5)];
        let (out, diags) = apply_preplan_ranking(&cands(&["A", "B", "C"]), &scores);
        assert_eq!(ids(&out), ["B", "C", "A"]);
        assert!(diags.is_empty());
        assert_eq!(out[0].index, 2);
    }

    #[test]
    fn ties_keep_original_order() {
        let scores = [PreplanScore::new(3, 0.5), PreplanScore::new(1, 0.5), PreplanScore::new(2, 0.5)];
        let (out, _) = apply_preplan_ranking(&cands(&["A", "B", "C"]), &scores);
        assert_eq!(ids(&out), ["A", "B", "C"]);
    }

    #[test]
    fn unscored_go_last_with_warning() {
        let (out, diags) = apply_preplan_ranking(&cands(&["A", "B", "C", "D"]), &[PreplanScore::new(3, 0.1)]);
        assert_eq!(ids(&out), ["C", "A", "B", "D"]);
        assert_eq!(diags[0].code, DiagnosticCode::PreplanUnscored);
    }

    #[test]
    fn malformed_payload_keeps_order() {
        let parsed = parse_preplan_scores("I think they are all fine.");
        let (out, diags) = apply_preplan_ranking(&cands(&["A", "B"]), &parsed.scores);
        assert_eq!(ids(&out), ["A", "B"]);
        assert_eq!(parsed.diagnostics[0].code, DiagnosticCode::PreplanMalformed);
        assert_eq!(diags[0].code, DiagnosticCode::PreplanMalformed);
    }

    #[test]
    fn parses_lines_leniently() {
        let text = "Here you go:\n1 | USES | 0.8\n- [Citation 2] | CIT-BACKGROUND | 0.25\n3 | FUTURE | high\n2 | USES | 0.9\n4 | | 1\n5 | USES | 1.5\n";
        let p = parse_preplan_scores(text);
        let got: Vec<_> = p.scores.iter().map(|s| (s.index, s.score)).collect();
        assert_eq!(got, [(1, 0.8), (2, 0.25), (4, 1.0)]);
        assert_eq!(p.scores[1].intent_type(), Some(IntentType::Citation(crate::intent::CitationKind::Background)));
        assert_eq!(p.scores[2].intent, None);
        let bad: Vec<_> = p.diagnostics.iter().map(|d| &text[d.source_range.start..d.source_range.end]).collect();
        assert_eq!(bad, ["3 | FUTURE | high", "2 | USES | 0.9", "5 | USES | 1.5"]);
    }
}

//! Citation-behavior statistics over parsed reports and reader ratings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationRecord, Condition, ItemClass};
use crate::candidates::CandidateSet;
use crate::intent::{CitationKind, IntentCategory, IntentType, ParagraphKind};
use crate::report::{CandidateIndex, Report};

/// Row label of the bucket holding labels outside the schema.
pub const ERROR_BUCKET: &str = "error";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("EMPTY_CANDIDATE_SET: no candidates to use")]
    EmptyCandidateSet,
    #[error("EMPTY_SET: no ratings for {0}")]
    EmptySet(ItemClass),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Pool every span, then take shares.
    #[default]
    Micro,
    /// Take shares per report, then average over reports that have spans.
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub label: String,
    pub count: u64,
    /// Absent when there are no spans at all.
    pub percentage: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentDistribution {
    pub category: IntentCategory,
    pub aggregation: Aggregation,
    pub total: u64,
    /// One row per schema type in table order, then the error bucket.
    pub rows: Vec<DistributionRow>,
}

impl IntentDistribution {
    pub fn row(&self, label: &str) -> Option<&DistributionRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn count(&self, label: &str) -> u64 {
        self.row(label).map_or(0, |r| r.count)
    }

    pub fn percentage(&self, label: &str) -> Option<f64> {
        self.row(label).and_then(|r| r.percentage)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["category", "type", "count", "percentage"])
            .expect("in-memory csv");
        for r in &self.rows {
            let pct = r.percentage.map(|p| format!("{p:.1}")).unwrap_or_default();
            w.write_record([self.category.as_str(), &r.label, &r.count.to_string(), &pct])
                .expect("in-memory csv");
        }
        into_string(w)
    }
}

/// Table row labels for a category, in display order, error bucket last.
pub fn row_labels(category: IntentCategory) -> Vec<&'static str> {
    let mut labels: Vec<&'static str> = match category {
        IntentCategory::Citation => CitationKind::ALL.iter().map(|k| k.table_label()).collect(),
        IntentCategory::Paragraph => ParagraphKind::TABLE_ORDER
            .iter()
            .map(|k| k.table_label())
            .collect(),
    };
    labels.push(ERROR_BUCKET);
    labels
}

fn row_label(t: &IntentType) -> &'static str {
    match t {
        IntentType::Citation(k) => k.table_label(),
        IntentType::Paragraph(k) => k.table_label(),
        IntentType::Other { .. } => ERROR_BUCKET,
    }
}

/// Counts every span of `category`; labels outside the schema land in the
/// error bucket.
pub fn intent_distribution(
    reports: &[Report],
    category: IntentCategory,
    aggregation: Aggregation,
) -> IntentDistribution {
    let labels = row_labels(category);
    let per_report: Vec<BTreeMap<&str, u64>> = reports
        .iter()
        .map(|r| {
            let mut m = BTreeMap::new();
            for span in r.spans_of(category) {
                *m.entry(row_label(&span.intent_type)).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for m in &per_report {
        for (k, v) in m {
            *counts.entry(k).or_insert(0) += v;
        }
    }
    let total: u64 = counts.values().sum();
    let share = |label: &str| -> Option<f64> {
        if total == 0 {
            return None;
        }
        Some(match aggregation {
            Aggregation::Micro => 100.0 * counts.get(label).copied().unwrap_or(0) as f64 / total as f64,
            Aggregation::Macro => {
                let shares: Vec<f64> = per_report
                    .iter()
                    .filter_map(|m| {
                        let n: u64 = m.values().sum();
                        (n > 0).then(|| 100.0 * m.get(label).copied().unwrap_or(0) as f64 / n as f64)
                    })
                    .collect();
                shares.iter().sum::<f64>() / shares.len() as f64
            }
        })
    };
    IntentDistribution {
        category,
        aggregation,
        total,
        rows: labels
            .iter()
            .map(|&label| DistributionRow {
                label: label.to_string(),
                count: counts.get(label).copied().unwrap_or(0),
                percentage: share(label),
            })
            .collect(),
    }
}

/// Share of the candidate set cited at least once. Model-memory citations
/// do not count.
pub fn candidate_usage(report: &Report, candidates: &CandidateSet) -> Result<f64, AnalyticsError> {
    candidate_usage_of(report, candidates.len())
}

/// [`candidate_usage`] against a set of `n` candidates. Indices beyond `n`
/// are ignored.
pub fn candidate_usage_of(report: &Report, n: usize) -> Result<f64, AnalyticsError> {
    if n == 0 {
        return Err(AnalyticsError::EmptyCandidateSet);
    }
    let used = report
        .cited_candidates()
        .iter()
        .filter(|i| i.get() as usize <= n)
        .count();
    Ok(used as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub fraction: f64,
    /// The reference report cites no candidate; `fraction` is then 0.
    pub reference_empty: bool,
}

/// Share of the reference report's distinct cited candidates that the
/// candidate report also cites.
pub fn citation_coverage(candidate: &Report, reference: &Report) -> Coverage {
    let reference_set: BTreeSet<CandidateIndex> = reference.cited_candidates();
    if reference_set.is_empty() {
        return Coverage {
            fraction: 0.0,
            reference_empty: true,
        };
    }
    let shared = candidate.cited_candidates().intersection(&reference_set).count();
    Coverage {
        fraction: shared as f64 / reference_set.len() as f64,
        reference_empty: false,
    }
}

/// Per-query fractions and their plain mean.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QueryStats {
    pub per_query: BTreeMap<String, f64>,
    pub mean: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl QueryStats {
    pub fn from_values(per_query: BTreeMap<String, f64>, warnings: Vec<String>) -> Self {
        let mean = if per_query.is_empty() {
            0.0
        } else {
            per_query.values().sum::<f64>() / per_query.len() as f64
        };
        QueryStats {
            per_query,
            mean,
            warnings,
        }
    }

    pub fn to_csv(&self, value_column: &str) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["query_id", value_column]).expect("in-memory csv");
        for (q, v) in &self.per_query {
            w.write_record([q.as_str(), &format!("{v:.4}")])
                .expect("in-memory csv");
        }
        w.write_record(["mean", &format!("{:.4}", self.mean)])
            .expect("in-memory csv");
        into_string(w)
    }
}

pub type UsageStats = QueryStats;
pub type CoverageStats = QueryStats;

/// Usage for each `(query_id, report, candidate count)`; queries with an
/// empty candidate set are skipped with a warning.
pub fn usage_stats<'a>(items: impl IntoIterator<Item = (&'a str, &'a Report, usize)>) -> UsageStats {
    let mut per_query = BTreeMap::new();
    let mut warnings = Vec::new();
    for (q, report, n) in items {
        match candidate_usage_of(report, n) {
            Ok(v) => {
                per_query.insert(q.to_string(), v);
            }
            Err(e) => warnings.push(format!("{q}: {e}")),
        }
    }
    QueryStats::from_values(per_query, warnings)
}

/// Coverage for each `(query_id, candidate, reference)` pair.
pub fn coverage_stats<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a Report, &'a Report)>,
) -> CoverageStats {
    let mut per_query = BTreeMap::new();
    let mut warnings = Vec::new();
    for (q, cand, reference) in pairs {
        let c = citation_coverage(cand, reference);
        if c.reference_empty {
            warnings.push(format!("{q}: reference report cites no candidate; coverage set to 0"));
        }
        per_query.insert(q.to_string(), c.fraction);
    }
    QueryStats::from_values(per_query, warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertSummary {
    pub item_class: ItemClass,
    pub n: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl fmt::Display for LikertSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

impl LikertSummary {
    pub fn to_csv(summaries: &[LikertSummary]) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["item_class", "n", "mean", "std"]).expect("in-memory csv");
        for s in summaries {
            w.write_record([
                s.item_class.as_str(),
                &s.n.to_string(),
                &format!("{:.2}", s.mean),
                &format!("{:.2}", s.std),
            ])
            .expect("in-memory csv");
        }
        into_string(w)
    }
}

/// Mean and population standard deviation of the ratings for one item
/// class, optionally restricted to one study condition.
pub fn likert_summary(
    annotations: &[AnnotationRecord],
    item_class: ItemClass,
    condition: Option<Condition>,
) -> Result<LikertSummary, AnalyticsError> {
    let ratings: Vec<f64> = annotations
        .iter()
        .filter(|a| a.item_class == item_class)
        .filter(|a| condition.is_none_or(|c| a.condition == c))
        .map(|a| f64::from(a.rating))
        .collect();
    if ratings.is_empty() {
        return Err(AnalyticsError::EmptySet(item_class));
    }
    let n = ratings.len() as f64;
    let mean = ratings.iter().sum::<f64>() / n;
    let var = ratings.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok(LikertSummary {
        item_class,
        n: ratings.len(),
        mean,
        std: var.sqrt(),
    })
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 input")
}

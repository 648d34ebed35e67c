//! Independent reference reader for canonical reports. Regex based and
//! deliberately naive: it shares no code with the real parser and only
//! understands the well-formed output of the synthetic generator.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

static SPAN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"<b(p|c)it>\[([^\]]*)\]:?(.*?)<e(p|c)it>").unwrap()
});
static MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[(?:Citation )?(\d+)\]|\[LLM MEMORY \| 2025\]").unwrap()
});

#[derive(Debug, Default, Clone, PartialEq)]
pub struct OracleDoc {
    pub sections: usize,
    pub paragraphs: usize,
    pub paragraph_labels: Vec<String>,
    pub citation_labels: Vec<String>,
    /// `None` for a model-memory marker.
    pub citations: Vec<Option<u32>>,
}

impl OracleDoc {
    pub fn cited(&self) -> BTreeSet<u32> {
        self.citations.iter().flatten().copied().collect()
    }
}

pub fn oracle_parse(text: &str) -> OracleDoc {
    let mut doc = OracleDoc::default();
    for block in text.split("\n\n") {
        if block.trim_start().starts_with("SECTION;") {
            doc.sections += 1;
            continue;
        }
        if block.trim().is_empty() {
            continue;
        }
        doc.paragraphs += 1;
        for c in SPAN.captures_iter(block) {
            assert_eq!(&c[1], &c[4], "oracle saw mismatched tags in {block:?}");
            let label = c[2].to_string();
            if &c[1] == "p" {
                doc.paragraph_labels.push(label);
            } else {
                doc.citation_labels.push(label);
            }
        }
        let bare = SPAN.replace_all(block, " ");
        for m in MARKER.captures_iter(&bare) {
            doc.citations.push(m.get(1).map(|n| n.as_str().parse().unwrap()));
        }
    }
    doc
}

const CITATION_NAMES: [(&str, &str); 6] = [
    ("background", "Background"),
    ("motivation", "Motivation"),
    ("uses", "Uses"),
    ("extension", "Extension"),
    ("comparisonorcontrast", "Comparison"),
    ("future", "Future"),
];

const PARAGRAPH_NAMES: [(&str, &str); 8] = [
    ("exposition", "Exposition"),
    ("definition", "Definition"),
    ("argumentation", "Argumentation"),
    ("comparecontrast", "Compare-Contrast"),
    ("causeeffect", "Cause-Effect"),
    ("problemsolution", "Problem-Solution"),
    ("evaluation", "Evaluation"),
    ("narration", "Narration"),
];

/// Distribution row for a raw label, or `None` for the error bucket.
pub fn oracle_row(raw: &str, citation: bool) -> Option<&'static str> {
    let lower = raw.trim().trim_end_matches(':').to_lowercase();
    let (prefix, table) = if citation {
        ("cit-", &CITATION_NAMES[..])
    } else {
        ("pit-", &PARAGRAPH_NAMES[..])
    };
    let name: String = lower
        .strip_prefix(prefix)
        .unwrap_or(&lower)
        .chars()
        .filter(|c| c.is_alphanumeric())
        .collect();
    table.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
}

/// Share of `1..=n` cited somewhere in `text`.
pub fn oracle_usage(text: &str, n: u32) -> f64 {
    let cited = oracle_parse(text).cited();
    let hits = (1..=n).filter(|i| cited.contains(i)).count();
    hits as f64 / n as f64
}

/// Share of the reference's cited candidates that `text` also cites.
pub fn oracle_coverage(text: &str, reference: &str) -> f64 {
    let mine = oracle_parse(text).cited();
    let theirs = oracle_parse(reference).cited();
    if theirs.is_empty() {
        return 0.0;
    }
    let mut shared = 0;
    for i in &theirs {
        if mine.contains(i) {
            shared += 1;
        }
    }
    shared as f64 / theirs.len() as f64
}

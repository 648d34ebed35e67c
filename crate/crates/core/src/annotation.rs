//! Reader-study ratings and their append-only store.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::report::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemClass {
    Paragraph,
    Citation,
}

impl ItemClass {
    pub const ALL: [ItemClass; 2] = [ItemClass::Paragraph, ItemClass::Citation];

    pub fn as_str(self) -> &'static str {
        match self {
            ItemClass::Paragraph => "paragraph",
            ItemClass::Citation => "citation",
        }
    }
}

impl fmt::Display for ItemClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ItemClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paragraph" => Ok(ItemClass::Paragraph),
            "citation" => Ok(ItemClass::Citation),
            other => Err(format!("unknown item class `{other}`")),
        }
    }
}

/// Study arm a participant was assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Baseline,
    Intent,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Baseline => "baseline",
            Condition::Intent => "intent",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Condition::Baseline),
            "intent" => Ok(Condition::Intent),
            other => Err(format!("unknown condition `{other}`")),
        }
    }
}

/// Position of a rated item: section, paragraph within the section, and
/// for citations the ordinal of the citation marker within the paragraph.
/// Written as `s/p` or `s/p/c`, all zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemId {
    pub section: usize,
    pub paragraph: usize,
    pub citation: Option<usize>,
}

impl ItemId {
    pub fn paragraph(section: usize, paragraph: usize) -> Self {
        ItemId {
            section,
            paragraph,
            citation: None,
        }
    }

    pub fn citation(section: usize, paragraph: usize, citation: usize) -> Self {
        ItemId {
            section,
            paragraph,
            citation: Some(citation),
        }
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.section, self.paragraph)?;
        if let Some(c) = self.citation {
            write!(f, "/{c}")?;
        }
        Ok(())
    }
}

impl FromStr for ItemId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('/').collect();
        let num = |p: &str| p.parse::<usize>().map_err(|_| format!("bad item id `{s}`"));
        match parts.as_slice() {
            [a, b] => Ok(ItemId::paragraph(num(a)?, num(b)?)),
            [a, b, c] => Ok(ItemId::citation(num(a)?, num(b)?, num(c)?)),
            _ => Err(format!("bad item id `{s}`")),
        }
    }
}

impl Serialize for ItemId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ItemId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub annotation_id: String,
    pub report_id: String,
    pub item_class: ItemClass,
    pub item_id: ItemId,
    pub rating: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    pub created_at: DateTime<Utc>,
    pub condition: Condition,
    #[serde(default)]
    pub annotator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("rating {0} is outside 1..5")]
    Rating(u8),
    #[error("item {item} does not exist in report {report}")]
    NoSuchItem { report: String, item: ItemId },
    #[error("{class} items need {expect}")]
    ClassMismatch {
        class: ItemClass,
        expect: &'static str,
    },
}

impl AnnotationRecord {
    /// Checks the rating range and that the item resolves inside `report`.
    pub fn validate_against(&self, report: &Report) -> Result<(), AnnotationError> {
        if !(1..=5).contains(&self.rating) {
            return Err(AnnotationError::Rating(self.rating));
        }
        match (self.item_class, self.item_id.citation) {
            (ItemClass::Paragraph, Some(_)) => {
                return Err(AnnotationError::ClassMismatch {
                    class: ItemClass::Paragraph,
                    expect: "a `section/paragraph` id",
                })
            }
            (ItemClass::Citation, None) => {
                return Err(AnnotationError::ClassMismatch {
                    class: ItemClass::Citation,
                    expect: "a `section/paragraph/citation` id",
                })
            }
            _ => {}
        }
        let missing = || AnnotationError::NoSuchItem {
            report: self.report_id.clone(),
            item: self.item_id,
        };
        let paragraph = report
            .sections
            .get(self.item_id.section)
            .and_then(|s| s.paragraphs.get(self.item_id.paragraph))
            .ok_or_else(missing)?;
        if let Some(c) = self.item_id.citation {
            if c >= paragraph.citations().count() {
                return Err(missing());
            }
        }
        Ok(())
    }

    fn key(&self) -> (&str, ItemId, &str) {
        (&self.report_id, self.item_id, &self.annotator)
    }
}

/// Append-only JSON-lines log. Each record is written with a single
/// `write_all` under a lock and synced before the call returns.
pub struct AnnotationStore {
    path: PathBuf,
    file: Mutex<File>,
}

#[derive(Debug, Default)]
pub struct LoadedAnnotations {
    pub records: Vec<AnnotationRecord>,
    /// 1-based numbers of lines that did not parse (e.g. a torn tail).
    pub bad_lines: Vec<usize>,
}

impl AnnotationStore {
    pub fn open(path: impl Into<PathBuf>) -> io::Result<Self> {
        let path = path.into();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(AnnotationStore {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, record: &AnnotationRecord) -> io::Result<()> {
        let mut line = serde_json::to_vec(record).map_err(io::Error::from)?;
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(&line)?;
        file.sync_data()
    }

    /// Every record in log order.
    pub fn load(&self) -> io::Result<LoadedAnnotations> {
        load_log(&self.path)
    }

    /// The latest record for each (report, item, annotator), in the log
    /// order of those latest records.
    pub fn export(&self) -> io::Result<Vec<AnnotationRecord>> {
        Ok(latest_only(self.load()?.records))
    }
}

pub fn load_log(path: &Path) -> io::Result<LoadedAnnotations> {
    let mut out = LoadedAnnotations::default();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(e),
    };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.records.push(r),
            Err(_) => out.bad_lines.push(i + 1),
        }
    }
    Ok(out)
}

pub fn latest_only(records: Vec<AnnotationRecord>) -> Vec<AnnotationRecord> {
    let mut last: HashMap<(String, ItemId, String), usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        let (a, b, c) = r.key();
        last.insert((a.to_string(), b, c.to_string()), i);
    }
    records
        .into_iter()
        .enumerate()
        .filter(|(i, r)| {
            let (a, b, c) = r.key();
            last.get(&(a.to_string(), b, c.to_string())) == Some(i)
        })
        .map(|(_, r)| r)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::parse_report;

    fn rec(item: ItemId, class: ItemClass, rating: u8, who: &str) -> AnnotationRecord {
        AnnotationRecord {
            annotation_id: format!("{item}-{rating}-{who}"),
            report_id: "r1".into(),
            item_class: class,
            item_id: item,
            rating,
            comment: None,
            created_at: DateTime::UNIX_EPOCH,
            condition: Condition::Intent,
            annotator: who.into(),
        }
    }

    #[test]
    fn item_ids_round_trip() {
        for s in ["0/1", "2/0/3"] {
            assert_eq!(s.parse::<ItemId>().unwrap().to_string(), s);
        }
        assert!("1".parse::<ItemId>().is_err());
        assert!("a/b".parse::<ItemId>().is_err());
    }

    #[test]
    fn validation() {
        let report = parse_report("SECTION; A\nTLDR; t\n\none [1] [2].\n\ntwo.\n");
        assert!(rec(ItemId::paragraph(0, 1), ItemClass::Paragraph, 5, "").validate_against(&report).is_ok());
        assert!(rec(ItemId::citation(0, 0, 1), ItemClass::Citation, 1, "").validate_against(&report).is_ok());
        assert_eq!(
            rec(ItemId::paragraph(0, 0), ItemClass::Paragraph, 6, "").validate_against(&report),
            Err(AnnotationError::Rating(6))
        );
        assert!(rec(ItemId::citation(0, 0, 2), ItemClass::Citation, 3, "").validate_against(&report).is_err());
        assert!(rec(ItemId::paragraph(1, 0), ItemClass::Paragraph, 3, "").validate_against(&report).is_err());
        assert!(rec(ItemId::paragraph(0, 0), ItemClass::Citation, 3, "").validate_against(&report).is_err());
    }

    #[test]
    fn store_appends_and_exports_latest() {
        let dir = tempfile::tempdir().unwrap();
        let store = AnnotationStore::open(dir.path().join("sub/annotations.jsonl")).unwrap();
        let a = rec(ItemId::paragraph(0, 0), ItemClass::Paragraph, 2, "u1");
        let b = rec(ItemId::paragraph(0, 0), ItemClass::Paragraph, 4, "u2");
        let a2 = rec(ItemId::paragraph(0, 0), ItemClass::Paragraph, 5, "u1");
        for r in [&a, &b, &a2] {
            store.append(r).unwrap();
        }
        assert_eq!(store.load().unwrap().records.len(), 3);
        assert_eq!(store.export().unwrap(), vec![b, a2]);
    }

    #[test]
    fn torn_tail_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        let store = AnnotationStore::open(&path).unwrap();
        store.append(&rec(ItemId::paragraph(0, 0), ItemClass::Paragraph, 2, "")).unwrap();
        std::fs::OpenOptions::new().append(true).open(&path).unwrap().write_all(b"{\"annot").unwrap();
        let loaded = load_log(&path).unwrap();
        assert_eq!(loaded.records.len(), 1);
        assert_eq!(loaded.bad_lines, [2]);
    }
}

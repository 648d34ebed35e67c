//! Resumable batch generation into a corpus directory:
//!
//! ```text
//! out/records/{query_id}.json   one GenerationRecord each
//! out/errors/{query_id}.json    last failure for a query
//! out/manifest.json             rebuilt from a directory scan
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use intentmark_core::candidates::query_id;
use intentmark_core::prompt::PromptVariant;
use intentmark_core::record::GenerationRecord;
use serde::{Deserialize, Serialize};

use crate::generate::Pipeline;
use crate::retrieval::write_atomic;

pub const RECORDS_DIR: &str = "records";
pub const ERRORS_DIR: &str = "errors";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub query_id: String,
    pub query: String,
    pub error: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub query_id: String,
    pub query: String,
    pub file: String,
    pub variant: PromptVariant,
    pub model: String,
    pub created_at: DateTime<Utc>,
    pub diagnostics: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub updated_at: DateTime<Utc>,
    pub record_count: usize,
    pub error_count: usize,
    pub records: Vec<ManifestRecord>,
    pub errors: Vec<ErrorEntry>,
    /// Guidance for trainers consuming SFT files built from this corpus.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusSummary {
    pub requested: usize,
    pub skipped: usize,
    pub generated: usize,
    pub failed: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("no queries given")]
    NoQueries,
    #[error("io on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Decode { path: PathBuf, source: serde_json::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn record_path(out: &Path, query_id: &str) -> PathBuf {
    out.join(RECORDS_DIR).join(format!("{query_id}.json"))
}

fn error_path(out: &Path, query_id: &str) -> PathBuf {
    out.join(ERRORS_DIR).join(format!("{query_id}.json"))
}

/// Generates one record per distinct query, skipping queries that already
/// have a record in `out`. Failures are written to `errors/` and the run
/// continues. Up to `max_in_flight` queries run at once.
pub async fn build_teacher_corpus(
    pipeline: &Pipeline,
    queries: &[String],
    variant: PromptVariant,
    out: &Path,
    max_in_flight: usize,
) -> Result<CorpusSummary, CorpusError> {
    let mut seen = BTreeSet::new();
    let queries: Vec<&str> = queries
        .iter()
        .map(|q| q.trim())
        .filter(|q| !q.is_empty() && seen.insert(query_id(q)))
        .collect();
    if queries.is_empty() {
        return Err(CorpusError::NoQueries);
    }
    for dir in [RECORDS_DIR, ERRORS_DIR] {
        let d = out.join(dir);
        std::fs::create_dir_all(&d).map_err(io_err(&d))?;
    }
    let mut summary = CorpusSummary {
        requested: queries.len(),
        ..CorpusSummary::default()
    };
    let todo: Vec<&str> = queries
        .into_iter()
        .filter(|q| {
            let done = record_path(out, &query_id(q)).exists();
            if done {
                summary.skipped += 1;
            }
            !done
        })
        .collect();

    let outcomes: Vec<Result<bool, CorpusError>> = stream::iter(todo)
        .map(|q| async move {
            let qid = query_id(q);
            match pipeline.generate_report(q, variant).await {
                Ok(record) => {
                    let path = record_path(out, &qid);
                    let body = serde_json::to_vec_pretty(&record).expect("record serialization cannot fail");
                    write_atomic(&path, &body).map_err(io_err(&path))?;
                    let stale = error_path(out, &qid);
                    if stale.exists() {
                        std::fs::remove_file(&stale).map_err(io_err(&stale))?;
                    }
                    Ok(true)
                }
                Err(e) => {
                    tracing::warn!(query_id = %qid, "generation failed: {e}");
                    let entry = ErrorEntry {
                        query_id: qid.clone(),
                        query: q.to_string(),
                        error: e.to_string(),
                        at: Utc::now(),
                    };
                    let path = error_path(out, &qid);
                    let body = serde_json::to_vec_pretty(&entry).expect("entry serialization cannot fail");
                    write_atomic(&path, &body).map_err(io_err(&path))?;
                    Ok(false)
                }
            }
        })
        .buffer_unordered(max_in_flight.max(1))
        .collect()
        .await;
    for o in outcomes {
        if o? {
            summary.generated += 1;
        } else {
            summary.failed += 1;
        }
    }
    write_manifest(out)?;
    Ok(summary)
}

/// Rebuilds `manifest.json` from the files present in `out`.
pub fn write_manifest(out: &Path) -> Result<Manifest, CorpusError> {
    let records = load_records(out)?;
    let errors: Vec<ErrorEntry> = read_dir_json(&out.join(ERRORS_DIR))?;
    let manifest = Manifest {
        updated_at: Utc::now(),
        record_count: records.len(),
        error_count: errors.len(),
        records: records
            .iter()
            .map(|r| ManifestRecord {
                query_id: r.query_id.clone(),
                query: r.query.clone(),
                file: format!("{RECORDS_DIR}/{}.json", r.query_id),
                variant: r.variant,
                model: r.config.model.clone(),
                created_at: r.created_at,
                diagnostics: r.diagnostics.len(),
            })
            .collect(),
        errors,
        notes: vec![
            "Multiview SFT files hold four examples per record; train them for a quarter of the steps of single-view files to match compute.".into(),
        ],
    };
    let path = out.join(MANIFEST_FILE);
    let body = serde_json::to_vec_pretty(&manifest).expect("manifest serialization cannot fail");
    write_atomic(&path, &body).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Every record in `out/records`, ordered by query id.
pub fn load_records(out: &Path) -> Result<Vec<GenerationRecord>, CorpusError> {
    read_dir_json(&out.join(RECORDS_DIR))
}

fn read_dir_json<T: serde::de::DeserializeOwned>(dir: &Path) -> Result<Vec<T>, CorpusError> {
    let entries = match std::fs::read_dir(dir) {
        Ok(e) => e,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(dir)(e)),
    };
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|source| CorpusError::Decode {
                path: p.clone(),
                source,
            })
        })
        .collect()
}

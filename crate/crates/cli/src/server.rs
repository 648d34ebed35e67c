//! JSON API for the reader study.
//!
//! ```text
//! GET  /api/session                   {condition}
//! GET  /api/reports                   [{report_id, query, variant}]
//! GET  /api/reports/{id}?mode=        reader payload
//! POST /api/annotations               {annotation_id}
//! GET  /api/annotations/export        JSON lines
//! ```
//!
//! Errors are `{"error": {"code", "message"}}`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use intentmark_core::annotation::{AnnotationRecord, AnnotationStore, Condition, ItemClass, ItemId};
use intentmark_core::candidates::SnippetCandidate;
use intentmark_core::prompt::PromptVariant;
use intentmark_core::reader::reader_payload;
use intentmark_core::record::GenerationRecord;
use intentmark_core::report::Report;
use serde::{Deserialize, Serialize};
use serde_json::json;

pub struct StoredReport {
    pub query: String,
    pub variant: PromptVariant,
    pub report: Report,
    pub candidates: Vec<SnippetCandidate>,
}

/// Read-only reports keyed by report id (the record's query id).
#[derive(Default)]
pub struct ReportStore {
    reports: BTreeMap<String, StoredReport>,
}

impl ReportStore {
    pub fn from_records(records: impl IntoIterator<Item = GenerationRecord>) -> Self {
        let reports = records
            .into_iter()
            .map(|r| {
                (
                    r.query_id,
                    StoredReport {
                        query: r.query,
                        variant: r.variant,
                        report: r.parsed,
                        candidates: r.candidates,
                    },
                )
            })
            .collect();
        ReportStore { reports }
    }

    pub fn load_corpus(dir: &Path) -> anyhow::Result<Self> {
        Ok(Self::from_records(intentmark_pipeline::load_records(dir)?))
    }

    pub fn get(&self, id: &str) -> Option<&StoredReport> {
        self.reports.get(id)
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}

pub struct AppState {
    pub reports: ReportStore,
    pub annotations: AnnotationStore,
    /// Fixed study arm for this server. `None` lets clients pick per request.
    pub condition: Option<Condition>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/session", get(session))
        .route("/api/reports", get(list_reports))
        .route("/api/reports/{id}", get(get_report))
        .route("/api/annotations", post(post_annotation))
        .route("/api/annotations/export", get(export_annotations))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such route") })
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "VALIDATION_FAILED", message)
    }

    fn store(e: impl std::fmt::Display) -> Self {
        tracing::error!("annotation store: {e}");
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "STORE_UNAVAILABLE", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

async fn session(State(s): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({ "condition": s.condition }))
}

#[derive(Serialize)]
struct ReportSummary<'a> {
    report_id: &'a str,
    query: &'a str,
    variant: PromptVariant,
}

async fn list_reports(State(s): State<Arc<AppState>>) -> Response {
    let list: Vec<ReportSummary> = s
        .reports
        .reports
        .iter()
        .map(|(id, r)| ReportSummary {
            report_id: id,
            query: &r.query,
            variant: r.variant,
        })
        .collect();
    Json(list).into_response()
}

#[derive(Deserialize)]
struct ModeQuery {
    mode: Option<String>,
}

async fn get_report(
    State(s): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ModeQuery>,
) -> Result<Response, ApiError> {
    let mode = match (q.mode.as_deref(), s.condition) {
        (Some(m), fixed) => {
            let m: Condition = m
                .parse()
                .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", e))?;
            if fixed.is_some_and(|f| f != m) {
                return Err(ApiError::new(
                    StatusCode::FORBIDDEN,
                    "CONDITION_MISMATCH",
                    format!("this session serves the {} condition", fixed.unwrap()),
                ));
            }
            m
        }
        (None, Some(fixed)) => fixed,
        (None, None) => Condition::Baseline,
    };
    let stored = s
        .reports
        .get(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", format!("no report `{id}`")))?;
    let payload = reader_payload(&id, &stored.query, &stored.report, &stored.candidates, mode);
    Ok(Json(payload).into_response())
}

/// Client-side fields of an annotation; the server assigns the id and
/// timestamp. `rating` is wide so out-of-range values reach validation.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewAnnotation {
    report_id: String,
    item_class: ItemClass,
    item_id: ItemId,
    rating: i64,
    #[serde(default)]
    comment: Option<String>,
    #[serde(default)]
    annotator: String,
    #[serde(default)]
    condition: Option<Condition>,
}

async fn post_annotation(
    State(s): State<Arc<AppState>>,
    body: Result<Json<NewAnnotation>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(new) = body.map_err(|e| ApiError::validation(e.body_text()))?;
    let condition = match (new.condition, s.condition) {
        (Some(c), Some(fixed)) if c != fixed => {
            return Err(ApiError::validation(format!("this session serves the {fixed} condition")))
        }
        (_, Some(fixed)) => fixed,
        (Some(c), None) => c,
        (None, None) => return Err(ApiError::validation("condition is required")),
    };
    let rating = u8::try_from(new.rating)
        .ok()
        .filter(|r| (1..=5).contains(r))
        .ok_or_else(|| ApiError::validation(format!("rating {} is outside 1..5", new.rating)))?;
    let stored = s
        .reports
        .get(&new.report_id)
        .ok_or_else(|| ApiError::validation(format!("no report `{}`", new.report_id)))?;
    let record = AnnotationRecord {
        annotation_id: uuid::Uuid::new_v4().to_string(),
        report_id: new.report_id,
        item_class: new.item_class,
        item_id: new.item_id,
        rating,
        comment: new.comment.filter(|c| !c.trim().is_empty()),
        created_at: Utc::now(),
        condition,
        annotator: new.annotator,
    };
    record
        .validate_against(&stored.report)
        .map_err(|e| ApiError::validation(e.to_string()))?;
    let id = record.annotation_id.clone();
    let state = s.clone();
    tokio::task::spawn_blocking(move || state.annotations.append(&record))
        .await
        .map_err(ApiError::store)?
        .map_err(ApiError::store)?;
    Ok((StatusCode::CREATED, Json(json!({ "annotation_id": id }))).into_response())
}

async fn export_annotations(State(s): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let state = s.clone();
    let records = tokio::task::spawn_blocking(move || state.annotations.export())
        .await
        .map_err(ApiError::store)?
        .map_err(ApiError::store)?;
    let mut body = String::new();
    for r in &records {
        body.push_str(&serde_json::to_string(r).expect("annotation serialization cannot fail"));
        body.push('\n');
    }
    Ok((
        [
            (header::CONTENT_TYPE, "application/x-ndjson"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"annotations.jsonl\""),
        ],
        body,
    )
        .into_response())
}

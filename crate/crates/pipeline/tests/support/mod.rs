#![allow(dead_code)]

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use intentmark_core::candidates::{query_id, CandidateSet, Provenance, SnippetCandidate};
use intentmark_pipeline::gateway::Backoff;
use intentmark_pipeline::{CandidateSource, GenerationConfig, RetrievalError};
use serde_json::{json, Value};

pub type Handler = dyn Fn(&Value, usize) -> (u16, String) + Send + Sync;

pub struct MockState {
    handler: Box<Handler>,
    delay: Duration,
    pub hits: AtomicUsize,
    pub inflight: AtomicUsize,
    pub peak: AtomicUsize,
    pub bodies: Mutex<Vec<Value>>,
}

pub struct MockServer {
    pub url: String,
    pub state: Arc<MockState>,
}

impl MockServer {
    pub fn hits(&self) -> usize {
        self.state.hits.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.state.peak.load(Ordering::SeqCst)
    }

    pub fn bodies(&self) -> Vec<Value> {
        self.state.bodies.lock().unwrap().clone()
    }
}

pub fn chat_ok(text: &str) -> (u16, String) {
    (
        200,
        json!({
            "id": "x",
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}}],
            "usage": {"prompt_tokens": 10, "completion_tokens": 5, "total_tokens": 15}
        })
        .to_string(),
    )
}

async fn chat(State(s): State<Arc<MockState>>, Json(body): Json<Value>) -> impl IntoResponse {
    let n = s.hits.fetch_add(1, Ordering::SeqCst);
    let now = s.inflight.fetch_add(1, Ordering::SeqCst) + 1;
    s.peak.fetch_max(now, Ordering::SeqCst);
    s.bodies.lock().unwrap().push(body.clone());
    if !s.delay.is_zero() {
        tokio::time::sleep(s.delay).await;
    }
    let (status, text) = (s.handler)(&body, n);
    s.inflight.fetch_sub(1, Ordering::SeqCst);
    (StatusCode::from_u16(status).unwrap(), text)
}

/// Serves `POST /v1/chat/completions`; `handler` gets the request body and
/// the zero-based hit number.
pub async fn mock_chat(
    delay: Duration,
    handler: impl Fn(&Value, usize) -> (u16, String) + Send + Sync + 'static,
) -> MockServer {
    let state = Arc::new(MockState {
        handler: Box::new(handler),
        delay,
        hits: AtomicUsize::new(0),
        inflight: AtomicUsize::new(0),
        peak: AtomicUsize::new(0),
        bodies: Mutex::new(Vec::new()),
    });
    let app = Router::new()
        .route("/v1/chat/completions", post(chat))
        .with_state(state.clone());
    let url = serve(app).await;
    MockServer {
        url: format!("{url}/v1"),
        state,
    }
}

async fn search(State(s): State<Arc<MockState>>, Query(q): Query<Value>) -> impl IntoResponse {
    s.hits.fetch_add(1, Ordering::SeqCst);
    s.bodies.lock().unwrap().push(q.clone());
    let (status, text) = (s.handler)(&q, 0);
    (StatusCode::from_u16(status).unwrap(), text)
}

/// Serves the two search endpoints. The handler sees the query string as
/// a JSON object with an added `"endpoint"` of `"keyword"` or `"snippet"`.
pub async fn mock_search(handler: impl Fn(&Value, usize) -> (u16, String) + Send + Sync + 'static) -> MockServer {
    let state = Arc::new(MockState {
        handler: Box::new(move |q: &Value, n| handler(q, n)),
        delay: Duration::ZERO,
        hits: AtomicUsize::new(0),
        inflight: AtomicUsize::new(0),
        peak: AtomicUsize::new(0),
        bodies: Mutex::new(Vec::new()),
    });
    let tag = |kind: &'static str| {
        move |st: State<Arc<MockState>>, Query(mut q): Query<Value>| async move {
            q["endpoint"] = json!(kind);
            search(st, Query(q)).await
        }
    };
    let app = Router::new()
        .route("/graph/v1/paper/search", get(tag("keyword")))
        .route("/graph/v1/snippet/search", get(tag("snippet")))
        .with_state(state.clone());
    MockServer {
        url: serve(app).await,
        state,
    }
}

async fn serve(app: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    format!("http://{addr}")
}

pub fn fast_config(base_url: &str) -> GenerationConfig {
    GenerationConfig {
        base_url: base_url.to_string(),
        model_name: "mock-model".into(),
        retry_limit: 3,
        timeout: Duration::from_secs(10),
        backoff: fast_backoff(),
        ..GenerationConfig::default()
    }
}

pub fn fast_backoff() -> Backoff {
    Backoff {
        base: Duration::from_millis(1),
        cap: Duration::from_millis(5),
    }
}

pub fn candidates(n: u32) -> Vec<SnippetCandidate> {
    (1..=n)
        .map(|i| SnippetCandidate {
            index: i,
            paper_id: format!("P{i}"),
            title: format!("Paper {i}"),
            snippet: format!("Quote from paper {i}."),
            salient: None,
            citation_count: 100 - u64::from(i),
        })
        .collect()
}

/// In-memory candidate source returning `n` candidates for any query.
pub struct StaticSource {
    pub n: u32,
    pub calls: AtomicUsize,
}

impl StaticSource {
    pub fn new(n: u32) -> Self {
        StaticSource {
            n,
            calls: AtomicUsize::new(0),
        }
    }
}

#[async_trait]
impl CandidateSource for StaticSource {
    async fn assemble(&self, query: &str) -> Result<CandidateSet, RetrievalError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(CandidateSet {
            query_id: query_id(query),
            query: query.trim().to_string(),
            candidates: candidates(self.n),
            frozen_at: chrono::DateTime::UNIX_EPOCH,
            source: Provenance::default(),
        })
    }
}

pub const APPENDIX_EXAMPLE: &str = "<bpit>[PIT-Exposition] This paragraph provides background context by introducing Convolutional Neural Networks (CNNs) and stating their established success in image classification, setting the stage for the subsequent discussion. <epit> Convolutional neural networks (CNNs) have achieved state-of-the-art results in image classification <bcit>[CIT-BACKGROUND]: these citations provides foundational context linking CNN to major image classification tasks <ecit> [1] [2]. They have become a foundational tool...";

pub fn appendix_in_section() -> String {
    format!("SECTION; Background\nTLDR; CNNs are a standard tool for images. They set strong results.\n\n{APPENDIX_EXAMPLE}\n")
}

type Script = dyn Fn(&str, usize) -> Result<String, intentmark_pipeline::GatewayError> + Send + Sync;

/// In-process backend answering from a closure over the user text and the
/// zero-based call number. Records every prompt it sees.
pub struct Scripted {
    script: Box<Script>,
    pub calls: AtomicUsize,
    pub prompts: Mutex<Vec<intentmark_core::prompt::PromptBundle>>,
}

impl Scripted {
    pub fn new(
        script: impl Fn(&str, usize) -> Result<String, intentmark_pipeline::GatewayError> + Send + Sync + 'static,
    ) -> Arc<Self> {
        Arc::new(Scripted {
            script: Box::new(script),
            calls: AtomicUsize::new(0),
            prompts: Mutex::new(Vec::new()),
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl intentmark_pipeline::CompletionBackend for Scripted {
    async fn complete(
        &self,
        prompt: &intentmark_core::prompt::PromptBundle,
    ) -> Result<intentmark_pipeline::CompletionRecord, intentmark_pipeline::GatewayError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        self.prompts.lock().unwrap().push(prompt.clone());
        tokio::task::yield_now().await;
        let text = (self.script)(&prompt.user_text, n)?;
        Ok(intentmark_pipeline::CompletionRecord {
            request_id: format!("req-{n}"),
            prompt: prompt.clone(),
            response_text: text,
            usage: Default::default(),
            attempts: 1,
            latency: Duration::ZERO,
        })
    }

    fn model_name(&self) -> &str {
        "scripted"
    }
}

pub fn is_preplan(user_text: &str) -> bool {
    user_text.contains("Fill in these")
}

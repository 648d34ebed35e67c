//! Scholarly search client and the frozen per-query candidate cache.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use chrono::Utc;
use futures::stream::{self, StreamExt};
use intentmark_core::candidates::{
    decode_cache, encode_cache, merge_records, query_id, CacheError, CandidateSet, PaperRecord,
    Provenance, SnippetCandidate, SnippetRecord,
};
use intentmark_core::prompt::{build_salience_prompt, DEFAULT_SALIENT_MAX_CHARS};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gateway::{Backoff, CompletionBackend};

pub const DEFAULT_SEARCH_URL: &str = "https://api.semanticscholar.org";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    pub base_url: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub keyword_limit: usize,
    pub snippet_limit: usize,
    /// Snippets longer than this many characters get a salience pass.
    pub salience_threshold: usize,
    pub salient_max_chars: usize,
    pub cache_dir: PathBuf,
    pub retry_limit: u32,
    pub timeout_secs: u64,
    pub salience_concurrency: usize,
    #[serde(skip)]
    pub backoff: Backoff,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            base_url: DEFAULT_SEARCH_URL.into(),
            api_key: None,
            keyword_limit: 20,
            snippet_limit: 40,
            salience_threshold: 1200,
            salient_max_chars: DEFAULT_SALIENT_MAX_CHARS,
            cache_dir: PathBuf::from("cache/candidates"),
            retry_limit: 3,
            timeout_secs: 60,
            salience_concurrency: 4,
            backoff: Backoff::default(),
        }
    }
}

impl RetrievalConfig {
    /// Picks up `S2_API_KEY` from the environment.
    pub fn with_env_key(mut self) -> Self {
        self.api_key = std::env::var("S2_API_KEY").ok().filter(|k| !k.is_empty());
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("NETWORK: {0}")]
    Network(String),
    #[error("RATE_LIMITED: still throttled after {0} attempts")]
    RateLimited(u32),
    #[error("BAD_RESPONSE: {0}")]
    BadResponse(String),
    #[error("CACHE_CORRUPT: {path}: {source}")]
    CacheCorrupt { path: PathBuf, source: CacheError },
    #[error("cache io: {0}")]
    Io(#[from] std::io::Error),
    #[error("limit must be at least 1")]
    ZeroLimit,
}

/// Where candidate sets come from.
#[async_trait]
pub trait CandidateSource: Send + Sync {
    async fn assemble(&self, query: &str) -> Result<CandidateSet, RetrievalError>;
}

#[derive(Clone)]
pub struct SearchClient {
    http: reqwest::Client,
    base_url: String,
    api_key: Option<String>,
    retry_limit: u32,
    backoff: Backoff,
}

impl SearchClient {
    pub fn new(config: &RetrievalConfig) -> Result<Self, RetrievalError> {
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| RetrievalError::Network(e.to_string()))?;
        Ok(SearchClient {
            http,
            base_url: config.base_url.trim_end_matches('/').to_string(),
            api_key: config.api_key.clone(),
            retry_limit: config.retry_limit,
            backoff: config.backoff,
        })
    }

    /// Keyword paper search, in service order.
    pub async fn search_keyword(&self, query: &str, limit: usize) -> Result<Vec<PaperRecord>, RetrievalError> {
        if limit == 0 {
            return Err(RetrievalError::ZeroLimit);
        }
        let limit_s = limit.to_string();
        let body = self
            .get(
                "/graph/v1/paper/search",
                &[
                    ("query", query),
                    ("limit", &limit_s),
                    ("fields", "corpusId,title,citationCount,abstract"),
                ],
            )
            .await?;
        let mut out = parse_keyword_response(&body)?;
        out.truncate(limit);
        Ok(out)
    }

    /// Snippet search, in service order.
    pub async fn search_snippets(&self, query: &str, limit: usize) -> Result<Vec<SnippetRecord>, RetrievalError> {
        if limit == 0 {
            return Err(RetrievalError::ZeroLimit);
        }
        let limit_s = limit.to_string();
        let body = self
            .get("/graph/v1/snippet/search", &[("query", query), ("limit", &limit_s)])
            .await?;
        let mut out = parse_snippet_response(&body)?;
        out.truncate(limit);
        Ok(out)
    }

    async fn get(&self, path: &str, params: &[(&str, &str)]) -> Result<String, RetrievalError> {
        let url = format!("{}{}", self.base_url, path);
        let attempts = self.retry_limit + 1;
        let mut last_err = String::new();
        for attempt in 1..=attempts {
            let mut req = self.http.get(&url).query(params);
            if let Some(key) = &self.api_key {
                req = req.header("x-api-key", key);
            }
            match req.send().await {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .text()
                            .await
                            .map_err(|e| RetrievalError::Network(e.to_string()));
                    }
                    if status.as_u16() == 429 {
                        last_err = "rate limited".into();
                        if attempt == attempts {
                            return Err(RetrievalError::RateLimited(attempts));
                        }
                    } else if status.is_server_error() {
                        last_err = format!("HTTP {status}");
                    } else {
                        let body = resp.text().await.unwrap_or_default();
                        return Err(RetrievalError::BadResponse(format!("HTTP {status}: {body}")));
                    }
                }
                Err(e) => last_err = e.to_string(),
            }
            if attempt < attempts {
                tokio::time::sleep(self.backoff.delay(attempt)).await;
            }
        }
        Err(RetrievalError::Network(last_err))
    }
}

fn id_of(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) if !s.is_empty() => Some(s.clone()),
        _ => None,
    }
}

fn data(body: &str) -> Result<Vec<Value>, RetrievalError> {
    let v: Value = serde_json::from_str(body).map_err(|e| RetrievalError::BadResponse(e.to_string()))?;
    match v.get("data") {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => Ok(items.clone()),
        Some(_) => Err(RetrievalError::BadResponse("`data` is not an array".into())),
    }
}

/// Parses a keyword-search response body. Entries without any paper id
/// are skipped.
pub fn parse_keyword_response(body: &str) -> Result<Vec<PaperRecord>, RetrievalError> {
    Ok(data(body)?
        .iter()
        .filter_map(|item| {
            let paper_id = item
                .get("corpusId")
                .and_then(id_of)
                .or_else(|| item.get("paperId").and_then(id_of))?;
            Some(PaperRecord {
                paper_id,
                title: item.get("title").and_then(Value::as_str).unwrap_or_default().to_string(),
                citation_count: item.get("citationCount").and_then(Value::as_u64).unwrap_or(0),
                abstract_text: item
                    .get("abstract")
                    .and_then(Value::as_str)
                    .map(str::to_string),
            })
        })
        .collect())
}

/// Parses a snippet-search response body. Entries without a paper id or
/// snippet text are skipped.
pub fn parse_snippet_response(body: &str) -> Result<Vec<SnippetRecord>, RetrievalError> {
    Ok(data(body)?
        .iter()
        .filter_map(|item| {
            let paper = item.get("paper")?;
            let paper_id = paper
                .get("corpusId")
                .and_then(id_of)
                .or_else(|| paper.get("paperId").and_then(id_of))?;
            let text = item.get("snippet")?.get("text")?.as_str()?.to_string();
            Some(SnippetRecord {
                paper_id,
                title: paper.get("title").and_then(Value::as_str).unwrap_or_default().to_string(),
                text,
                citation_count: paper.get("citationCount").and_then(Value::as_u64).unwrap_or(0),
            })
        })
        .collect())
}

/// Live retrieval behind a per-query frozen cache.
pub struct Retriever {
    client: SearchClient,
    config: RetrievalConfig,
    salience: Option<Arc<dyn CompletionBackend>>,
    inflight: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl Retriever {
    pub fn new(config: RetrievalConfig, salience: Option<Arc<dyn CompletionBackend>>) -> Result<Self, RetrievalError> {
        Ok(Retriever {
            client: SearchClient::new(&config)?,
            config,
            salience,
            inflight: Mutex::new(HashMap::new()),
        })
    }

    pub fn cache_path(&self, query_id: &str) -> PathBuf {
        self.config.cache_dir.join(format!("{query_id}.json"))
    }

    /// Returns the frozen set for `query`, materializing it on first use.
    /// Concurrent callers for the same query share one materialization.
    pub async fn assemble_candidates(&self, query: &str) -> Result<CandidateSet, RetrievalError> {
        let qid = query_id(query);
        let key_lock = {
            let mut map = self.inflight.lock().unwrap_or_else(|e| e.into_inner());
            map.entry(qid.clone()).or_default().clone()
        };
        let _guard = key_lock.lock().await;
        let path = self.cache_path(&qid);
        if let Some(set) = read_frozen(&path)? {
            return Ok(set);
        }
        let set = self.materialize(query, qid).await?;
        write_frozen(&path, &set)?;
        Ok(set)
    }

    async fn materialize(&self, query: &str, qid: String) -> Result<CandidateSet, RetrievalError> {
        let (keyword, snippets) = tokio::try_join!(
            self.client.search_keyword(query, self.config.keyword_limit),
            self.client.search_snippets(query, self.config.snippet_limit),
        )?;
        let mut candidates = merge_records(&keyword, &snippets);
        if let Some(backend) = &self.salience {
            self.condense(query, backend.as_ref(), &mut candidates).await;
        }
        Ok(CandidateSet {
            query_id: qid,
            query: query.trim().to_string(),
            candidates,
            frozen_at: Utc::now(),
            source: Provenance {
                service: self.config.base_url.clone(),
                keyword_limit: self.config.keyword_limit,
                snippet_limit: self.config.snippet_limit,
                salience_threshold: self.config.salience_threshold,
                salience_model: self.salience.as_ref().map(|b| b.model_name().to_string()),
                keyword_hits: keyword.len(),
                snippet_hits: snippets.len(),
            },
        })
    }

    async fn condense(&self, query: &str, backend: &dyn CompletionBackend, candidates: &mut [SnippetCandidate]) {
        let threshold = self.config.salience_threshold;
        let max_chars = self.config.salient_max_chars;
        let jobs: Vec<(usize, String)> = candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.snippet.chars().count() > threshold)
            .map(|(i, c)| (i, c.snippet.clone()))
            .collect();
        let results: Vec<(usize, Option<String>)> = stream::iter(jobs)
            .map(|(i, snippet)| async move {
                let Ok(prompt) = build_salience_prompt(query, &snippet, max_chars) else {
                    return (i, None);
                };
                match backend.complete(&prompt).await {
                    Ok(rec) => (i, accept_salient(&rec.response_text, &snippet)),
                    Err(e) => {
                        tracing::warn!("salience extraction failed: {e}");
                        (i, None)
                    }
                }
            })
            .buffer_unordered(self.config.salience_concurrency.max(1))
            .collect()
            .await;
        for (i, salient) in results {
            candidates[i].salient = salient;
        }
    }
}

/// Keeps an extract only when it is non-empty and no longer than the
/// snippet it came from.
pub fn accept_salient(extract: &str, snippet: &str) -> Option<String> {
    let extract = extract.split_whitespace().collect::<Vec<_>>().join(" ");
    (!extract.is_empty() && extract.chars().count() <= snippet.chars().count()).then_some(extract)
}

#[async_trait]
impl CandidateSource for Retriever {
    async fn assemble(&self, query: &str) -> Result<CandidateSet, RetrievalError> {
        self.assemble_candidates(query).await
    }
}

/// Reads a frozen set, `None` when no file exists.
pub fn read_frozen(path: &Path) -> Result<Option<CandidateSet>, RetrievalError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    decode_cache(&text)
        .map(Some)
        .map_err(|source| RetrievalError::CacheCorrupt {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes a frozen set via a temporary file and rename.
pub fn write_frozen(path: &Path, set: &CandidateSet) -> Result<(), RetrievalError> {
    write_atomic(path, encode_cache(set).as_bytes())?;
    Ok(())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Candidate sets read from a directory of frozen files, never touching
/// the network.
pub struct FrozenCandidates {
    dir: PathBuf,
}

impl FrozenCandidates {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FrozenCandidates { dir: dir.into() }
    }
}

#[async_trait]
impl CandidateSource for FrozenCandidates {
    async fn assemble(&self, query: &str) -> Result<CandidateSet, RetrievalError> {
        let path = self.dir.join(format!("{}.json", query_id(query)));
        read_frozen(&path)?.ok_or_else(|| {
            RetrievalError::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("no frozen candidate set at {}", path.display()),
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_fixture() {
        let body = r#"{"total":3,"offset":0,"data":[
            {"paperId":"abc","corpusId":123,"title":"A","citationCount":7,"abstract":"x"},
            {"paperId":"def","corpusId":null,"title":"B","citationCount":null,"abstract":null},
            {"title":"no id"}]}"#;
        let r = parse_keyword_response(body).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].paper_id, "123");
        assert_eq!(r[1].paper_id, "def");
        assert_eq!(r[1].citation_count, 0);
        assert!(parse_keyword_response(r#"{"total":0}"#).unwrap().is_empty());
        assert!(parse_keyword_response("[]").unwrap().is_empty());
        assert!(parse_keyword_response(r#"{"data":5}"#).is_err());
    }

    #[test]
    fn snippet_fixture() {
        let body = r#"{"data":[{"snippet":{"text":"t1","snippetKind":"body"},"score":0.5,"paper":{"corpusId":"9","title":"P"}},
            {"snippet":{},"paper":{"corpusId":"9"}}]}"#;
        let r = parse_snippet_response(body).unwrap();
        assert_eq!(r, vec![SnippetRecord { paper_id: "9".into(), title: "P".into(), text: "t1".into(), citation_count: 0 }]);
    }

    #[test]
    fn salient_acceptance() {
        assert_eq!(accept_salient("  a  b ", "a b c"), Some("a b".into()));
        assert_eq!(accept_salient("   ", "abc"), None);
        assert_eq!(accept_salient("longer than", "short"), None);
    }
}

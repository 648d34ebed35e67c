//! Chat-completions client with retries, bounded parallelism and a JSON
//! lines request log.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use chrono::Utc;
use futures::stream::{self, StreamExt};
use intentmark_core::prompt::PromptBundle;
use rand::Rng;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::time::Instant;

pub const DEFAULT_TEMPERATURE: f64 = 1.0;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 22_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backoff {
    #[serde(with = "millis")]
    pub base: Duration,
    #[serde(with = "millis")]
    pub cap: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            base: Duration::from_secs(1),
            cap: Duration::from_secs(30),
        }
    }
}

impl Backoff {
    /// Delay before retry number `retry` (1-based): exponential, capped,
    /// with jitter drawn from the upper half of the window.
    pub fn delay(&self, retry: u32) -> Duration {
        let exp = self
            .base
            .saturating_mul(1u32.checked_shl(retry.saturating_sub(1)).unwrap_or(u32::MAX));
        let window = exp.min(self.cap);
        window.mul_f64(rand::rng().random_range(0.5..=1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub base_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub retry_limit: u32,
    #[serde(with = "millis")]
    pub timeout: Duration,
    #[serde(default)]
    pub backoff: Backoff,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            base_url: "http://localhost:8000/v1".into(),
            model_name: "gemini-2.5-pro".into(),
            temperature: DEFAULT_TEMPERATURE,
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            retry_limit: 3,
            timeout: Duration::from_secs(600),
            backoff: Backoff::default(),
            api_key: None,
        }
    }
}

impl GenerationConfig {
    /// Defaults overridden by `LLM_BASE_URL` and `LLM_API_KEY`.
    pub fn from_env() -> Self {
        let mut c = GenerationConfig::default();
        if let Ok(url) = std::env::var("LLM_BASE_URL") {
            c.base_url = url;
        }
        c.api_key = std::env::var("LLM_API_KEY").ok().filter(|k| !k.is_empty());
        c
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(GatewayError::InvalidConfig(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(GatewayError::InvalidConfig("max_output_tokens must be >= 1".into()));
        }
        if self.timeout.is_zero() {
            return Err(GatewayError::InvalidConfig("timeout must be positive".into()));
        }
        Ok(())
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: Option<u64>,
    #[serde(default)]
    pub completion_tokens: Option<u64>,
    #[serde(default)]
    pub total_tokens: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub request_id: String,
    pub prompt: PromptBundle,
    pub response_text: String,
    pub usage: Usage,
    pub attempts: u32,
    #[serde(with = "millis")]
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("EXHAUSTED_RETRIES after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: String },
    #[error("AUTH_FAILED ({status}): {body}")]
    AuthFailed { status: u16, body: String },
    #[error("BAD_REQUEST ({status}): {body}")]
    BadRequest { status: u16, body: String },
    #[error("deadline reached after {attempts} attempts")]
    DeadlineExceeded { attempts: u32 },
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
}

/// Anything that turns a prompt into text.
#[async_trait]
pub trait CompletionBackend: Send + Sync {
    async fn complete(&self, prompt: &PromptBundle) -> Result<CompletionRecord, GatewayError>;

    fn model_name(&self) -> &str;

    fn base_url(&self) -> &str {
        ""
    }

    fn temperature(&self) -> f64 {
        DEFAULT_TEMPERATURE
    }

    fn max_output_tokens(&self) -> u32 {
        DEFAULT_MAX_OUTPUT_TOKENS
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

/// Extracts the first choice's text and the usage block from a
/// chat-completions response body.
pub fn parse_chat_response(body: &str) -> Result<(String, Usage), String> {
    let parsed: ChatResponse = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let usage = parsed.usage.unwrap_or_default();
    let text = parsed
        .choices
        .into_iter()
        .next()
        .ok_or("response has no choices")?
        .message
        .content
        .ok_or("first choice has no content")?;
    Ok((text, usage))
}

/// One attempt's outcome, before retry policy is applied.
enum Attempt {
    Done(String, Usage),
    Retry(String, Option<Duration>),
    Fatal(GatewayError),
}

#[derive(Clone)]
pub struct Gateway {
    http: reqwest::Client,
    config: Arc<GenerationConfig>,
    log: Option<Arc<Mutex<File>>>,
}

impl Gateway {
    pub fn new(config: GenerationConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let http = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::InvalidConfig(e.to_string()))?;
        Ok(Gateway {
            http,
            config: Arc::new(config),
            log: None,
        })
    }

    /// Appends one JSON line per attempt to `path`.
    pub fn with_log(mut self, path: &Path) -> std::io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        self.log = Some(Arc::new(Mutex::new(file)));
        Ok(self)
    }

    pub fn config(&self) -> &GenerationConfig {
        &self.config
    }

    pub async fn complete(&self, prompt: &PromptBundle) -> Result<CompletionRecord, GatewayError> {
        self.complete_until(prompt, None).await
    }

    /// Like [`Gateway::complete`], but gives up once `deadline` passes;
    /// backoff sleeps never run past it.
    pub async fn complete_until(
        &self,
        prompt: &PromptBundle,
        deadline: Option<Instant>,
    ) -> Result<CompletionRecord, GatewayError> {
        let request_id = uuid::Uuid::new_v4().to_string();
        let started = Instant::now();
        let body = self.request_body(prompt);
        let max_attempts = self.config.retry_limit + 1;
        let mut last = String::new();
        for attempt in 1..=max_attempts {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(GatewayError::DeadlineExceeded { attempts: attempt - 1 });
            }
            let send = self.attempt(&body);
            let outcome = match deadline {
                Some(d) => match tokio::time::timeout_at(d, send).await {
                    Ok(o) => o,
                    Err(_) => {
                        self.log_event(&request_id, attempt, "deadline", None);
                        return Err(GatewayError::DeadlineExceeded { attempts: attempt });
                    }
                },
                None => send.await,
            };
            match outcome {
                Attempt::Done(text, usage) => {
                    self.log_event(
                        &request_id,
                        attempt,
                        "success",
                        Some(json!({"response_text": text, "usage": usage})),
                    );
                    return Ok(CompletionRecord {
                        request_id,
                        prompt: prompt.clone(),
                        response_text: text,
                        usage,
                        attempts: attempt,
                        latency: started.elapsed(),
                    });
                }
                Attempt::Fatal(e) => {
                    self.log_event(&request_id, attempt, "fatal", Some(json!({"error": e.to_string()})));
                    return Err(e);
                }
                Attempt::Retry(reason, retry_after) => {
                    self.log_event(&request_id, attempt, "retryable", Some(json!({"error": reason})));
                    last = reason;
                    if attempt == max_attempts {
                        break;
                    }
                    let mut wait = self.config.backoff.delay(attempt);
                    if let Some(ra) = retry_after {
                        wait = wait.max(ra.min(self.config.backoff.cap));
                    }
                    if let Some(d) = deadline {
                        if Instant::now() + wait >= d {
                            return Err(GatewayError::DeadlineExceeded { attempts: attempt });
                        }
                    }
                    tokio::time::sleep(wait).await;
                }
            }
        }
        Err(GatewayError::ExhaustedRetries {
            attempts: max_attempts,
            last,
        })
    }

    /// Completes every prompt with at most `max_in_flight` requests
    /// outstanding. Results line up with `prompts`.
    pub async fn complete_many(
        &self,
        prompts: &[PromptBundle],
        max_in_flight: usize,
    ) -> Vec<Result<CompletionRecord, GatewayError>> {
        stream::iter(prompts.iter().map(|p| self.complete(p)))
            .buffered(max_in_flight.max(1))
            .collect()
            .await
    }

    fn request_body(&self, prompt: &PromptBundle) -> serde_json::Value {
        let mut messages = Vec::new();
        if let Some(system) = &prompt.system_text {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": prompt.user_text}));
        json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        })
    }

    async fn attempt(&self, body: &serde_json::Value) -> Attempt {
        let mut req = self.http.post(self.config.endpoint()).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send().await {
            Ok(r) => r,
            Err(e) if e.is_builder() => {
                return Attempt::Fatal(GatewayError::BadRequest {
                    status: 0,
                    body: e.to_string(),
                })
            }
            Err(e) => return Attempt::Retry(format!("transport: {e}"), None),
        };
        let status = resp.status();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match resp.text().await {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}"), None),
        };
        classify(status, text, retry_after)
    }

    fn log_event(&self, request_id: &str, attempt: u32, event: &str, extra: Option<serde_json::Value>) {
        let Some(log) = &self.log else { return };
        let mut line = json!({
            "ts": Utc::now().to_rfc3339(),
            "request_id": request_id,
            "attempt": attempt,
            "event": event,
            "model": self.config.model_name,
        });
        if let (Some(obj), Some(serde_json::Value::Object(extra))) = (line.as_object_mut(), extra) {
            obj.extend(extra);
        }
        let mut bytes = line.to_string().into_bytes();
        bytes.push(b'\n');
        let mut f = log.lock().unwrap_or_else(|e| e.into_inner());
        if let Err(e) = f.write_all(&bytes) {
            tracing::warn!("request log write failed: {e}");
        }
    }
}

fn classify(status: StatusCode, body: String, retry_after: Option<Duration>) -> Attempt {
    let code = status.as_u16();
    match code {
        200..=299 => match parse_chat_response(&body) {
            Ok((text, usage)) => Attempt::Done(text, usage),
            Err(e) => Attempt::Retry(format!("malformed response: {e}"), None),
        },
        401 | 403 => Attempt::Fatal(GatewayError::AuthFailed { status: code, body }),
        408 | 409 | 425 | 429 | 500..=599 => Attempt::Retry(format!("HTTP {code}"), retry_after),
        _ => Attempt::Fatal(GatewayError::BadRequest { status: code, body }),
    }
}

#[async_trait]
impl CompletionBackend for Gateway {
    async fn complete(&self, prompt: &PromptBundle) -> Result<CompletionRecord, GatewayError> {
        Gateway::complete(self, prompt).await
    }

    fn model_name(&self) -> &str {
        &self.config.model_name
    }

    fn base_url(&self) -> &str {
        &self.config.base_url
    }

    fn temperature(&self) -> f64 {
        self.config.temperature
    }

    fn max_output_tokens(&self) -> u32 {
        self.config.max_output_tokens
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

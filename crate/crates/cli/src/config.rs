//! Optional TOML config file. Every key is optional; command-line flags
//! override the file, and the file overrides environment defaults.
//!
//! ```toml
//! [gateway]
//! base_url = "http://localhost:8000/v1"
//! model = "my-model"
//! max_in_flight = 8
//!
//! [retrieval]
//! cache_dir = "cache/candidates"
//!
//! [serve]
//! addr = "127.0.0.1:8080"
//! condition = "intent"
//! ```

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use intentmark_core::annotation::Condition;
use intentmark_pipeline::{GenerationConfig, RetrievalConfig};
use serde::Deserialize;

pub const DEFAULT_MAX_IN_FLIGHT: usize = 8;
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub gateway: GatewaySection,
    pub retrieval: RetrievalSection,
    pub serve: ServeSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewaySection {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub retry_limit: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub max_in_flight: Option<usize>,
    /// JSON-lines request log.
    pub log: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub base_url: Option<String>,
    pub keyword_limit: Option<usize>,
    pub snippet_limit: Option<usize>,
    pub salience_threshold: Option<usize>,
    pub salient_max_chars: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    /// Condense long snippets with the gateway model.
    pub salience: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub addr: Option<String>,
    pub condition: Option<Condition>,
    pub corpus: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn gateway_config(&self) -> GenerationConfig {
        let g = &self.gateway;
        let mut c = GenerationConfig::from_env();
        if let Some(v) = &g.base_url {
            c.base_url = v.clone();
        }
        if let Some(v) = &g.model {
            c.model_name = v.clone();
        }
        if let Some(v) = g.temperature {
            c.temperature = v;
        }
        if let Some(v) = g.max_output_tokens {
            c.max_output_tokens = v;
        }
        if let Some(v) = g.retry_limit {
            c.retry_limit = v;
        }
        if let Some(v) = g.timeout_secs {
            c.timeout = Duration::from_secs(v);
        }
        c
    }

    pub fn max_in_flight(&self) -> usize {
        self.gateway.max_in_flight.unwrap_or(DEFAULT_MAX_IN_FLIGHT)
    }

    pub fn retrieval_config(&self) -> RetrievalConfig {
        let r = &self.retrieval;
        let mut c = RetrievalConfig::default().with_env_key();
        if let Some(v) = &r.base_url {
            c.base_url = v.clone();
        }
        if let Some(v) = r.keyword_limit {
            c.keyword_limit = v;
        }
        if let Some(v) = r.snippet_limit {
            c.snippet_limit = v;
        }
        if let Some(v) = r.salience_threshold {
            c.salience_threshold = v;
        }
        if let Some(v) = r.salient_max_chars {
            c.salient_max_chars = v;
        }
        if let Some(v) = &r.cache_dir {
            c.cache_dir = v.clone();
        }
        c
    }
}

//! Networked side of the toolkit: scholarly retrieval with a frozen
//! candidate cache, a chat-completions gateway, and the report and corpus
//! pipelines that tie them to the core grammar.

pub mod corpus;
pub mod gateway;
pub mod generate;
pub mod retrieval;

pub use corpus::{build_teacher_corpus, load_records, write_manifest, CorpusSummary};
pub use gateway::{CompletionBackend, CompletionRecord, Gateway, GatewayError, GenerationConfig};
pub use generate::{Pipeline, PipelineError, PipelineOptions};
pub use retrieval::{CandidateSource, FrozenCandidates, RetrievalConfig, RetrievalError, Retriever};

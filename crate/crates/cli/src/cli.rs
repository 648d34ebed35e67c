use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use intentmark_core::analytics::{
    coverage_stats, intent_distribution, likert_summary, usage_stats, Aggregation, LikertSummary, QueryStats,
};
use intentmark_core::annotation::{latest_only, load_log, AnnotationStore, Condition, ItemClass};
use intentmark_core::intent::IntentCategory;
use intentmark_core::prompt::PromptVariant;
use intentmark_core::record::GenerationRecord;
use intentmark_core::report::{parse_report, serialize_report, validate_report, Diagnostic, Report, SerializeMode};
use intentmark_core::sft::{emit_jsonl, make_views, CorpusMode};
use intentmark_pipeline::{
    build_teacher_corpus, load_records, CandidateSource, CompletionBackend, FrozenCandidates, Gateway, Pipeline,
    PipelineOptions, Retriever,
};

use crate::config::{FileConfig, DEFAULT_ADDR};

// stdout writes that surface a closed pipe as an error instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => { write!(std::io::stdout().lock(), $($arg)*)? };
}
macro_rules! outln {
    ($($arg:tt)*) => { writeln!(std::io::stdout().lock(), $($arg)*)? };
}
use crate::server::{router, AppState, ReportStore};

#[derive(Debug, Parser)]
#[command(name = "intentmark", version, about = "Intent-annotated report generation, SFT data and analytics")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = "INTENTMARK_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one report for a query.
    Generate(GenerateArgs),
    /// Generate a teacher corpus from a query file, resuming if interrupted.
    Corpus(CorpusArgs),
    /// Build an SFT JSONL file from a corpus directory.
    Sft(SftArgs),
    /// Corpus and study statistics.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Parse and validate a report (raw text or a record JSON file).
    Validate(ValidateArgs),
    /// Print a report with some or all intent tags removed.
    Strip(StripArgs),
    /// Print the parsed report tree as JSON.
    Parse(InputArg),
    /// Serve the reader-study JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GatewayFlags {
    /// Chat-completions base URL, e.g. http://localhost:8000/v1.
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Read frozen candidate sets from this directory instead of searching.
    #[arg(long)]
    pub frozen: Option<PathBuf>,
    /// Candidate cache directory for live retrieval.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Re-rank candidates with a pre-planning call first.
    #[arg(long)]
    pub preplan: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value = "both")]
    pub variant: PromptVariant,
    /// Write the record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub gateway: GatewayFlags,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// One query per line; blank lines and `#` comments are skipped.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value = "both")]
    pub variant: PromptVariant,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[command(flatten)]
    pub gateway: GatewayFlags,
}

#[derive(Debug, Args)]
pub struct SftArgs {
    /// baseline, implicit, explicit or multiview.
    #[arg(long)]
    pub mode: CorpusMode,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Analyze {
    /// Intent type distribution over a corpus.
    Dist {
        #[arg(long = "in")]
        input: PathBuf,
        /// citation or paragraph; both when omitted.
        #[arg(long)]
        category: Option<IntentCategory>,
        #[arg(long, value_enum, default_value = "micro")]
        aggregation: AggregationArg,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Share of the candidate set each report cites.
    Usage {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Overlap of each report's citations with a reference corpus.
    Coverage {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Likert mean and standard deviation from an annotation log.
    Likert {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        condition: Option<Condition>,
        #[arg(long)]
        item_class: Option<ItemClass>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregationArg {
    Micro,
    Macro,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Micro => Aggregation::Micro,
            AggregationArg::Macro => Aggregation::Macro,
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArg {
    /// File to read, `-` for stdin.
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Raw report text, or a record JSON file.
    pub file: PathBuf,
    /// Candidate set size for range checks on raw text.
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct StripArgs {
    pub file: PathBuf,
    /// stripped, paragraph-only, citation-only or full.
    #[arg(long, default_value = "stripped")]
    pub mode: SerializeMode,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Corpus directory whose records are served.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Annotation log (JSON lines).
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Fix the study arm for every client of this server.
    #[arg(long)]
    pub condition: Option<Condition>,
    #[arg(long)]
    pub addr: Option<String>,
}

pub async fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let config = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Generate(a) => generate(&config, a).await,
        Command::Corpus(a) => corpus(&config, a).await,
        Command::Sft(a) => sft(a),
        Command::Analyze(a) => analyze(a),
        Command::Validate(a) => validate(a),
        Command::Strip(a) => {
            let report = parse_report(&read_input(&a.file)?);
            out!("{}", serialize_report(&report, a.mode));
            Ok(ExitCode::SUCCESS)
        }
        Command::Parse(a) => {
            let report = parse_report(&read_input(&a.file)?);
            outln!("{}", report.to_json_pretty());
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve(a) => serve(&config, a).await,
    }
}

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn build_pipeline(config: &FileConfig, flags: &GatewayFlags) -> anyhow::Result<Pipeline> {
    let mut gc = config.gateway_config();
    if let Some(u) = &flags.base_url {
        gc.base_url = u.clone();
    }
    if let Some(m) = &flags.model {
        gc.model_name = m.clone();
    }
    let mut gateway = Gateway::new(gc)?;
    if let Some(log) = &config.gateway.log {
        gateway = gateway.with_log(log)?;
    }
    let backend: Arc<dyn CompletionBackend> = Arc::new(gateway);
    let source: Arc<dyn CandidateSource> = match &flags.frozen {
        Some(dir) => Arc::new(FrozenCandidates::new(dir)),
        None => {
            let mut rc = config.retrieval_config();
            if let Some(d) = &flags.cache_dir {
                rc.cache_dir = d.clone();
            }
            let salience = config.retrieval.salience.unwrap_or(false).then(|| backend.clone());
            Arc::new(Retriever::new(rc, salience)?)
        }
    };
    let options = PipelineOptions {
        preplan: flags.preplan,
        ..PipelineOptions::default()
    };
    Ok(Pipeline::new(backend, source, options))
}

async fn generate(config: &FileConfig, a: GenerateArgs) -> anyhow::Result<ExitCode> {
    let pipeline = build_pipeline(config, &a.gateway)?;
    let record = pipeline.generate_report(&a.query, a.variant).await?;
    let body = serde_json::to_string_pretty(&record)?;
    match &a.out {
        Some(p) => std::fs::write(p, body + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => outln!("{body}"),
    }
    for d in &record.diagnostics {
        eprintln!("{}", format_diagnostic(d));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn read_queries(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

async fn corpus(config: &FileConfig, a: CorpusArgs) -> anyhow::Result<ExitCode> {
    let queries = read_queries(&read_input(&a.queries)?);
    let pipeline = build_pipeline(config, &a.gateway)?;
    let max_in_flight = a.max_in_flight.unwrap_or_else(|| config.max_in_flight());
    let summary = build_teacher_corpus(&pipeline, &queries, a.variant, &a.out, max_in_flight).await?;
    outln!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if summary.failed > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

/// Views for every record the mode accepts; returns the examples and how
/// many records were skipped.
pub fn sft_examples(
    records: &[GenerationRecord],
    mode: CorpusMode,
) -> (Vec<intentmark_core::sft::TrainingExample>, usize) {
    let mut examples = Vec::new();
    let mut skipped = 0;
    for r in records {
        if !mode.accepts(r.variant) {
            tracing::warn!(query_id = %r.query_id, "variant {} does not fit mode {mode:?}", r.variant);
            skipped += 1;
            continue;
        }
        match make_views(r) {
            Ok(v) => examples.extend(v),
            Err(e) => {
                tracing::warn!("{e}");
                skipped += 1;
            }
        }
    }
    (examples, skipped)
}

fn sft(a: SftArgs) -> anyhow::Result<ExitCode> {
    let records = load_records(&a.input)?;
    let (examples, skipped) = sft_examples(&records, a.mode);
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut out = BufWriter::new(file);
    let n = emit_jsonl(&examples, a.mode, &mut out)?;
    out.flush()?;
    eprintln!("{n} lines from {} records ({skipped} skipped)", records.len());
    Ok(ExitCode::SUCCESS)
}

fn reports_of(records: &[GenerationRecord]) -> Vec<Report> {
    records.iter().map(|r| r.parsed.clone()).collect()
}

fn print_stats(stats: &QueryStats, column: &str, format: Format) -> anyhow::Result<()> {
    for w in &stats.warnings {
        eprintln!("warning: {w}");
    }
    match format {
        Format::Csv => out!("{}", stats.to_csv(column)),
        Format::Json => outln!("{}", serde_json::to_string_pretty(stats)?),
    }
    Ok(())
}

fn analyze(a: Analyze) -> anyhow::Result<ExitCode> {
    match a {
        Analyze::Dist {
            input,
            category,
            aggregation,
            format,
        } => {
            let reports = reports_of(&load_records(&input)?);
            let categories = category.map_or(IntentCategory::ALL.to_vec(), |c| vec![c]);
            let dists: Vec<_> = categories
                .into_iter()
                .map(|c| intent_distribution(&reports, c, aggregation.into()))
                .collect();
            match format {
                Format::Csv => {
                    for d in &dists {
                        out!("{}", d.to_csv());
                    }
                }
                Format::Json => outln!("{}", serde_json::to_string_pretty(&dists)?),
            }
        }
        Analyze::Usage { input, format } => {
            let records = load_records(&input)?;
            let stats = usage_stats(
                records
                    .iter()
                    .map(|r| (r.query_id.as_str(), &r.parsed, r.candidates.len())),
            );
            print_stats(&stats, "usage", format)?;
        }
        Analyze::Coverage {
            input,
            reference,
            format,
        } => {
            let records = load_records(&input)?;
            let refs: BTreeMap<String, GenerationRecord> = load_records(&reference)?
                .into_iter()
                .map(|r| (r.query_id.clone(), r))
                .collect();
            let mut missing = 0;
            let pairs: Vec<_> = records
                .iter()
                .filter_map(|r| {
                    let found = refs.get(&r.query_id);
                    if found.is_none() {
                        missing += 1;
                    }
                    found.map(|f| (r.query_id.as_str(), &r.parsed, &f.parsed))
                })
                .collect();
            if missing > 0 {
                eprintln!("warning: {missing} records have no reference report and are left out");
            }
            print_stats(&coverage_stats(pairs), "coverage", format)?;
        }
        Analyze::Likert {
            annotations,
            condition,
            item_class,
            format,
        } => {
            let loaded = load_log(&annotations)?;
            if !loaded.bad_lines.is_empty() {
                eprintln!("warning: unreadable lines {:?}", loaded.bad_lines);
            }
            let records = latest_only(loaded.records);
            let classes = item_class.map_or(ItemClass::ALL.to_vec(), |c| vec![c]);
            let mut summaries: Vec<LikertSummary> = Vec::new();
            for class in classes {
                match likert_summary(&records, class, condition) {
                    Ok(s) => summaries.push(s),
                    Err(e) if item_class.is_some() => bail!(e),
                    Err(e) => eprintln!("warning: {e}"),
                }
            }
            match format {
                Format::Csv => out!("{}", LikertSummary::to_csv(&summaries)),
                Format::Json => outln!("{}", serde_json::to_string_pretty(&summaries)?),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

pub fn format_diagnostic(d: &Diagnostic) -> String {
    format!(
        "{:?} {} {}..{} {}",
        d.severity,
        d.code.as_str(),
        d.source_range.start,
        d.source_range.end,
        d.message
    )
}

/// Diagnostics for a file holding either a record JSON or raw report
/// text, plus whether the file is internally consistent.
pub fn validate_file(text: &str, candidates: Option<usize>) -> (Vec<Diagnostic>, bool) {
    if let Ok(record) = serde_json::from_str::<GenerationRecord>(text) {
        let consistent = record.is_consistent();
        return (validate_report(&record.parsed, record.candidates.len()), consistent);
    }
    let report = parse_report(text);
    (validate_report(&report, candidates.unwrap_or(usize::MAX)), true)
}

fn validate(a: ValidateArgs) -> anyhow::Result<ExitCode> {
    let (diags, consistent) = validate_file(&read_input(&a.file)?, a.candidates);
    if a.json {
        outln!("{}", serde_json::to_string_pretty(&diags)?);
    } else {
        for d in &diags {
            outln!("{}", format_diagnostic(d));
        }
    }
    if !consistent {
        eprintln!("record is inconsistent: parsed tree differs from its raw report");
    }
    let failed = !consistent || diags.iter().any(Diagnostic::is_error);
    Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

async fn serve(config: &FileConfig, a: ServeArgs) -> anyhow::Result<ExitCode> {
    let reports = match a.corpus.as_ref().or(config.serve.corpus.as_ref()) {
        Some(dir) => ReportStore::load_corpus(dir)?,
        None => ReportStore::default(),
    };
    let log = a
        .annotations
        .or_else(|| config.serve.annotations.clone())
        .unwrap_or_else(|| PathBuf::from("annotations.jsonl"));
    let state = Arc::new(AppState {
        reports,
        annotations: AnnotationStore::open(&log).with_context(|| format!("opening {}", log.display()))?,
        condition: a.condition.or(config.serve.condition),
    });
    let addr = a
        .addr
        .or_else(|| config.serve.addr.clone())
        .unwrap_or_else(|| DEFAULT_ADDR.to_string());
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!(
        "serving {} reports on http://{} (condition: {})",
        state.reports.len(),
        listener.local_addr()?,
        state.condition.map_or("per request", |c| c.as_str())
    );
    axum::serve(listener, router(state)).await?;
    Ok(ExitCode::SUCCESS)
}

//! Command-line entry point: reproducible file-based runs of every check.
//!
//! Every command writes its artifacts under `{out_dir}/{run_id}/` together
//! with a `manifest.json` recording the resolved configuration and input
//! digests. With a fixed seed and fixed inputs, outputs are byte-identical
//! regardless of `--jobs`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::alignment::{
    alignment_topic_test, AlignmentConfig, AlignmentReport, ExpectedGapSource, GroupOrder,
    PriorDirection,
};
use crate::calibration::{
    run_calibration, CalibrationTest, SyntheticSpec,
};
use crate::collect::{
    collect_prepared, load_claims, prepare_icl_cells, prepare_template_cells, resolve_templates,
    CachedEmbeddings, CollectorConfig, EmbeddingStore, HttpEmbeddingEndpoint,
    IclExample, IclStrategy, Persona,
};
use crate::consistency::{
    strong_topic_test, two_group_grid, weak_topic_test, StrongTestConfig, StrongTestReport,
    WeakTestConfig, WeakTestReport,
};
use crate::ingest::{
    filter_workers_by_gold_accuracy, load_annotations, load_gold_specs, summarize_dataset,
    write_annotations, AnnotationFormat,
};
use crate::manifest::RunManifest;
use crate::model::{build_topic_dataset, AnnotationRecord, Source, BASE_CONDITION};
use crate::report::{
    benchmark_summary, emit_feasibility, feasibility_panel, render_topic_tables, LabeledAlignment,
    MethodReports,
};
use crate::stats::BootstrapConfig;

/// Exit codes of the binary.
pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_PARTIAL_COLLECTION: i32 = 2;

#[derive(Parser)]
#[command(
    name = "opinion-qc",
    version,
    about = "Quality-control tests for group-conditioned Likert opinion data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate annotation files, optionally applying the gold-question
    /// worker filter, and write the cleaned records.
    Ingest(IngestArgs),
    /// Per (topic, condition) means and per-topic claim counts.
    Summarize(SummarizeArgs),
    /// Query a chat-completions endpoint and persist Likert annotations.
    Collect(CollectArgs),
    /// Weak logical-consistency test (convex-hull rate per topic).
    Qc1Weak(WeakArgs),
    /// Strong logical-consistency test (stable mixture weight per topic).
    Qc1Strong(StrongArgs),
    /// Alignment against stakeholder priors.
    Qc2a(Qc2aArgs),
    /// Alignment against human reference data.
    Qc2b(Qc2bArgs),
    /// Score methods across all four checks.
    Benchmark(BenchmarkArgs),
    /// Size/power audit on synthetic data with known ground truth.
    Calibrate(CalibrateArgs),
    /// Re-render stored reports into tables or feasibility plots.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

impl FormatArg {
    fn resolve(format: Option<FormatArg>, path: &Path) -> AnnotationFormat {
        match format {
            Some(FormatArg::Csv) => AnnotationFormat::Csv,
            Some(FormatArg::Jsonl) => AnnotationFormat::Jsonl,
            None => AnnotationFormat::from_path(path),
        }
    }
}

#[derive(Args)]
struct OutArgs {
    /// Directory run artifacts are written under.
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
    /// Run identifier; artifacts land in {out-dir}/{run-id}/.
    #[arg(long = "run-id", default_value = "run")]
    run_id: String,
}

impl OutArgs {
    fn run_dir(&self) -> PathBuf {
        self.out_dir.join(&self.run_id)
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Gold-claim spec CSV (claim_id,expected_verdict); enables the filter.
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long = "accuracy-threshold", default_value_t = 0.8)]
    accuracy_threshold: f64,
    #[arg(long = "min-gold", default_value_t = 2)]
    min_gold: usize,
    /// Output format for the cleaned records.
    #[arg(long, value_enum, default_value = "csv")]
    emit: FormatArg,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SummarizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CollectArgs {
    /// Claims CSV (claim_id,topic,veracity,text).
    #[arg(long)]
    claims: PathBuf,
    #[arg(long)]
    endpoint: String,
    #[arg(long)]
    model: String,
    /// Built-in template ids (cond1, cond2, base1..base4).
    #[arg(long, value_delimiter = ',', default_value = "cond1,base1")]
    templates: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "man,woman")]
    personas: Vec<String>,
    /// Samples per (claim, persona, template) cell.
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    temperature: f64,
    #[arg(long, default_value_t = 3)]
    retries: usize,
    #[arg(long = "timeout-secs", default_value_t = 30)]
    timeout_secs: u64,
    /// Environment variable holding the API key.
    #[arg(long = "api-key-env")]
    api_key_env: Option<String>,
    #[arg(long = "parallel-requests", default_value_t = 1)]
    parallel_requests: usize,
    /// JSONL sink; appended to, resumable.
    #[arg(long)]
    out: PathBuf,
    /// In-context mode replacing --templates.
    #[arg(long, value_enum)]
    icl: Option<IclArg>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Example pool CSV (claim_id,text,man,woman,average).
    #[arg(long)]
    pool: Option<PathBuf>,
    #[arg(long = "icl-seed", default_value_t = 0)]
    icl_seed: u64,
    #[arg(long = "embeddings-endpoint")]
    embeddings_endpoint: Option<String>,
    #[arg(long = "embeddings-model", default_value = "all-MiniLM-L6-v2")]
    embeddings_model: String,
    #[arg(long = "embeddings-cache")]
    embeddings_cache: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum IclArg {
    Random,
    Nearest,
}

#[derive(Args)]
struct PartitionArgs {
    /// Restrict to these model names (default: all in the data).
    #[arg(long = "model")]
    models: Vec<String>,
    /// Restrict conditional (gendered) prompt ids.
    #[arg(long = "cond-prompt")]
    cond_prompts: Vec<String>,
    /// Restrict base prompt ids.
    #[arg(long = "base-prompt")]
    base_prompts: Vec<String>,
    /// Restrict topics.
    #[arg(long = "topic")]
    topics: Vec<String>,
}

#[derive(Args)]
struct WeakArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[command(flatten)]
    partition: PartitionArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bootstrap replicates B.
    #[arg(long, default_value_t = 10_000)]
    b: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.7, 0.8, 0.9, 1.0])]
    p0: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "min-labels", default_value_t = 2)]
    min_labels: usize,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct StrongArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[command(flatten)]
    partition: PartitionArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    b: usize,
    /// Scalar grid step for two-group data.
    #[arg(long = "q0-step", default_value_t = 0.05)]
    q0_step: f64,
    #[arg(long = "alpha-star", default_value_t = 0.0025)]
    alpha_star: f64,
    #[arg(long = "min-labels", default_value_t = 2)]
    min_labels: usize,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct Qc2aArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[command(flatten)]
    partition: PartitionArgs,
    /// Prior applied to every selected topic.
    #[arg(long, value_enum)]
    prior: Option<PriorArg>,
    /// JSON file mapping topic → prior direction; overrides --prior.
    #[arg(long = "priors-file")]
    priors_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "min-labels", default_value_t = 2)]
    min_labels: usize,
    #[arg(long = "g-plus", default_value = "woman")]
    g_plus: String,
    #[arg(long = "g-minus", default_value = "man")]
    g_minus: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PriorArg {
    ExpectNoDifference,
    ExpectDifference,
}

impl From<PriorArg> for PriorDirection {
    fn from(arg: PriorArg) -> Self {
        match arg {
            PriorArg::ExpectNoDifference => PriorDirection::ExpectNoDifference,
            PriorArg::ExpectDifference => PriorDirection::ExpectDifference,
        }
    }
}

#[derive(Args)]
struct Qc2bArgs {
    #[arg(long = "model-input")]
    model_input: PathBuf,
    #[arg(long = "model-format", value_enum)]
    model_format: Option<FormatArg>,
    #[arg(long = "human-input")]
    human_input: PathBuf,
    #[arg(long = "human-format", value_enum)]
    human_format: Option<FormatArg>,
    #[command(flatten)]
    partition: PartitionArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "min-labels", default_value_t = 2)]
    min_labels: usize,
    /// Minimum labels per human reference cell.
    #[arg(long = "min-reference-labels", default_value_t = 1)]
    min_reference_labels: usize,
    #[arg(long = "g-plus", default_value = "woman")]
    g_plus: String,
    #[arg(long = "g-minus", default_value = "man")]
    g_minus: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// JSON config: [{method, weak: [paths], strong: [...], qc2a: [...], qc2b: [...]}].
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Synthetic-population spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, value_enum)]
    test: CalibrateTestArg,
    #[arg(long)]
    runs: usize,
    #[arg(long, default_value_t = 2_000)]
    b: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.7, 0.8, 0.9, 1.0])]
    p0: Vec<f64>,
    /// Explicit scalar q0 values (two-group specs).
    #[arg(long = "q0", value_delimiter = ',')]
    q0: Vec<f64>,
    #[arg(long = "q0-step", default_value_t = 0.05)]
    q0_step: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long = "alpha-star", default_value_t = 0.0025)]
    alpha_star: f64,
    #[arg(long, value_enum, default_value = "expect-no-difference")]
    prior: PriorArg,
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CalibrateTestArg {
    Weak,
    Strong,
    Alignment,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_enum)]
    kind: ReportKindArg,
    /// Stored alignment reports (for --kind tables).
    #[arg(long = "alignment")]
    alignment: Vec<PathBuf>,
    /// Stored weak reports (for --kind feasibility).
    #[arg(long = "weak")]
    weak: Vec<PathBuf>,
    /// Stored strong reports (for --kind feasibility).
    #[arg(long = "strong")]
    strong: Vec<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportKindArg {
    Tables,
    Feasibility,
}

/// Wrapper for reports on disk, labeling the (model, prompt) they came from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StoredReport<T> {
    pub model: String,
    pub prompt: String,
    pub report: T,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Consistency(#[from] crate::consistency::ConsistencyError),
    #[error(transparent)]
    Alignment(#[from] crate::alignment::AlignmentError),
    #[error(transparent)]
    Collect(#[from] crate::collect::CollectError),
    #[error(transparent)]
    Calibration(#[from] crate::calibration::CalibrationError),
    #[error(transparent)]
    Report(#[from] crate::report::ReportError),
    #[error("transport: {0}")]
    Transport(#[from] crate::collect::TransportError),
    #[error("{path}: {message}")]
    BadFile { path: String, message: String },
}

/// Parse and dispatch. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Summarize(args) => cmd_summarize(args),
        Command::Collect(args) => cmd_collect(args),
        Command::Qc1Weak(args) => with_jobs(args.jobs, || cmd_weak(&args)),
        Command::Qc1Strong(args) => with_jobs(args.jobs, || cmd_strong(&args)),
        Command::Qc2a(args) => cmd_qc2a(args),
        Command::Qc2b(args) => cmd_qc2b(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Calibrate(args) => with_jobs(args.jobs, || cmd_calibrate(&args)),
        Command::Report(args) => cmd_report(args),
    }
}

/// Run inside a local rayon pool of the requested width. Results are
/// independent of the width by the RNG substream contract.
fn with_jobs<F: FnOnce() -> Result<i32, CliError> + Send>(
    jobs: Option<usize>,
    f: F,
) -> Result<i32, CliError> {
    match jobs {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| CliError::Validation(e.to_string()))?;
            pool.install(f)
        }
    }
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::BadFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::BadFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// File-name-safe label.
fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn panel_file_name(model: &str, prompt: &str, topic: &str, ext: &str) -> String {
    format!(
        "{}_{}_{}.{ext}",
        sanitize(model),
        sanitize(prompt),
        sanitize(topic)
    )
}

// ---------------------------------------------------------------------------
// Partitioning model data into (model, cond prompt, base prompt, topic) runs
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct ConsistencyKey {
    model: String,
    cond_prompt: String,
    base_prompt: String,
    topic: String,
}

impl ConsistencyKey {
    fn prompt_label(&self) -> String {
        if self.cond_prompt == self.base_prompt {
            self.cond_prompt.clone()
        } else {
            format!("{}-{}", self.cond_prompt, self.base_prompt)
        }
    }
}

fn keep(filter: &[String], value: &str) -> bool {
    filter.is_empty() || filter.iter().any(|f| f == value)
}

/// Enumerate the (model, cond prompt, base prompt, topic) combinations
/// present in the records, subject to the CLI filters.
fn consistency_partitions(
    records: &[AnnotationRecord],
    filters: &PartitionArgs,
) -> Vec<ConsistencyKey> {
    let mut keys = BTreeSet::new();
    let mut cond_prompts: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    let mut base_prompts: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for rec in records {
        let Source::Model { name, prompt_id } = &rec.source else {
            continue;
        };
        if !keep(&filters.models, name) || !keep(&filters.topics, &rec.topic) {
            continue;
        }
        let slot = (name.clone(), rec.topic.clone());
        if rec.condition == BASE_CONDITION {
            if keep(&filters.base_prompts, prompt_id) {
                base_prompts.entry(slot).or_default().insert(prompt_id.clone());
            }
        } else if keep(&filters.cond_prompts, prompt_id) {
            cond_prompts.entry(slot).or_default().insert(prompt_id.clone());
        }
    }
    for ((model, topic), conds) in &cond_prompts {
        let Some(bases) = base_prompts.get(&(model.clone(), topic.clone())) else {
            continue;
        };
        for cond in conds {
            for base in bases {
                keys.insert(ConsistencyKey {
                    model: model.clone(),
                    cond_prompt: cond.clone(),
                    base_prompt: base.clone(),
                    topic: topic.clone(),
                });
            }
        }
    }
    keys.into_iter().collect()
}

/// Records backing one consistency partition: gendered cells from the
/// conditional prompt plus base cells from the base prompt.
fn consistency_subset(records: &[AnnotationRecord], key: &ConsistencyKey) -> Vec<AnnotationRecord> {
    records
        .iter()
        .filter(|r| {
            let Source::Model { name, prompt_id } = &r.source else {
                return false;
            };
            name == &key.model
                && r.topic == key.topic
                && if r.condition == BASE_CONDITION {
                    prompt_id == &key.base_prompt
                } else {
                    prompt_id == &key.cond_prompt
                }
        })
        .cloned()
        .collect()
}

fn group_conditions(records: &[AnnotationRecord]) -> Vec<String> {
    let set: BTreeSet<String> = records
        .iter()
        .filter(|r| r.condition != BASE_CONDITION)
        .map(|r| r.condition.clone())
        .collect();
    set.into_iter().collect()
}

/// (model, cond prompt, topic) partitions for the alignment tests.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct AlignmentKey {
    model: String,
    cond_prompt: String,
    topic: String,
}

fn alignment_partitions(
    records: &[AnnotationRecord],
    filters: &PartitionArgs,
    order: &GroupOrder,
) -> Vec<AlignmentKey> {
    let mut keys = BTreeSet::new();
    for rec in records {
        let Source::Model { name, prompt_id } = &rec.source else {
            continue;
        };
        if rec.condition != order.plus && rec.condition != order.minus {
            continue;
        }
        if !keep(&filters.models, name)
            || !keep(&filters.topics, &rec.topic)
            || !keep(&filters.cond_prompts, prompt_id)
        {
            continue;
        }
        keys.insert(AlignmentKey {
            model: name.clone(),
            cond_prompt: prompt_id.clone(),
            topic: rec.topic.clone(),
        });
    }
    keys.into_iter().collect()
}

fn alignment_subset(
    records: &[AnnotationRecord],
    key: &AlignmentKey,
    order: &GroupOrder,
) -> Vec<AnnotationRecord> {
    records
        .iter()
        .filter(|r| {
            let Source::Model { name, prompt_id } = &r.source else {
                return false;
            };
            name == &key.model
                && prompt_id == &key.cond_prompt
                && r.topic == key.topic
                && (r.condition == order.plus || r.condition == order.minus)
        })
        .cloned()
        .collect()
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_ingest(args: IngestArgs) -> Result<i32, CliError> {
    let format = FormatArg::resolve(args.format, &args.input);
    let records = load_annotations(&args.input, format)?;
    let run_dir = args.out.run_dir();
    ensure_dir(&run_dir)?;

    let mut manifest = RunManifest::new(
        "ingest",
        serde_json::json!({
            "input": args.input.display().to_string(),
            "gold": args.gold.as_ref().map(|p| p.display().to_string()),
            "accuracy_threshold": args.accuracy_threshold,
            "min_gold": args.min_gold,
        }),
    );
    manifest.add_input(&args.input)?;

    let (kept, report) = match &args.gold {
        None => (records, serde_json::json!({ "filtered": false })),
        Some(gold_path) => {
            manifest.add_input(gold_path)?;
            let gold = load_gold_specs(gold_path)?;
            let outcome =
                filter_workers_by_gold_accuracy(&records, &gold, args.accuracy_threshold, args.min_gold)?;
            let report = serde_json::json!({
                "filtered": true,
                "kept_records": outcome.kept.len(),
                "dropped_workers": outcome.dropped_workers,
                "duplicates_removed": outcome.duplicates_removed,
            });
            (outcome.kept, report)
        }
    };

    let (out_name, out_format) = match args.emit {
        FormatArg::Csv => ("annotations.csv", AnnotationFormat::Csv),
        FormatArg::Jsonl => ("annotations.jsonl", AnnotationFormat::Jsonl),
    };
    write_annotations(&run_dir.join(out_name), &kept, out_format)?;
    write_json(&run_dir.join("filter_report.json"), &report)?;
    manifest.write(&run_dir.join("manifest.json"))?;
    println!("ingest: {} records -> {}", kept.len(), run_dir.display());
    Ok(EXIT_SUCCESS)
}

fn cmd_summarize(args: SummarizeArgs) -> Result<i32, CliError> {
    let format = FormatArg::resolve(args.format, &args.input);
    let records = load_annotations(&args.input, format)?;
    let summary = summarize_dataset(&records)?;
    let run_dir = args.out.run_dir();
    ensure_dir(&run_dir)?;

    write_json(&run_dir.join("summary.json"), &summary)?;
    let mut csv = String::from("topic,condition,n,mean,std_dev,single_sample\n");
    for row in &summary.condition_rows {
        csv.push_str(&format!(
            "{},{},{},{:?},{:?},{}\n",
            row.topic, row.condition, row.n, row.mean, row.std_dev, row.single_sample
        ));
    }
    std::fs::write(run_dir.join("summary.csv"), csv)?;
    let mut md = String::from("| Topic | Condition | n | Mean | Std dev |\n|---|---|---|---|---|\n");
    for row in &summary.condition_rows {
        md.push_str(&format!(
            "| {} | {} | {} | {:.2} | {:.2} |\n",
            row.topic, row.condition, row.n, row.mean, row.std_dev
        ));
    }
    std::fs::write(run_dir.join("summary.md"), md)?;

    let mut manifest = RunManifest::new(
        "summarize",
        serde_json::json!({ "input": args.input.display().to_string() }),
    );
    manifest.add_input(&args.input)?;
    manifest.write(&run_dir.join("manifest.json"))?;
    println!("summarize: {} rows -> {}", summary.condition_rows.len(), run_dir.display());
    Ok(EXIT_SUCCESS)
}

fn load_icl_pool(path: &Path) -> Result<Vec<IclExample>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::BadFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut pool = Vec::new();
    for row in reader.deserialize::<IclExample>() {
        pool.push(row.map_err(|e| CliError::BadFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?);
    }
    Ok(pool)
}

fn cmd_collect(args: CollectArgs) -> Result<i32, CliError> {
    let claims = load_claims(&args.claims)?;
    let personas: Vec<Persona> = args
        .personas
        .iter()
        .map(|p| Persona::parse(p))
        .collect::<Result<_, _>>()?;
    let mut cfg = CollectorConfig::new(&args.model);
    cfg.endpoint_url = args.endpoint.clone();
    cfg.temperature = args.temperature;
    cfg.samples_per_cell = args.n;
    cfg.max_retries = args.retries;
    cfg.timeout_secs = args.timeout_secs;
    cfg.api_key_env = args.api_key_env.clone();
    cfg.request_parallelism = args.parallel_requests;
    let endpoint = cfg.endpoint()?;

    let cells = match args.icl {
        None => {
            let templates = resolve_templates(&args.templates)?;
            prepare_template_cells(&claims, &personas, &templates)?
        }
        Some(mode) => {
            let pool_path = args.pool.as_ref().ok_or_else(|| {
                CliError::Validation("--icl requires --pool".into())
            })?;
            let pool = load_icl_pool(pool_path)?;
            match mode {
                IclArg::Random => prepare_icl_cells(
                    &claims,
                    &personas,
                    &IclStrategy::Random { seed: args.icl_seed },
                    args.k,
                    &pool,
                )?,
                IclArg::Nearest => {
                    let url = args.embeddings_endpoint.as_ref().ok_or_else(|| {
                        CliError::Validation("--icl nearest requires --embeddings-endpoint".into())
                    })?;
                    let cache = args.embeddings_cache.clone().unwrap_or_else(|| {
                        args.out.with_extension("embeddings.json")
                    });
                    let embedder = HttpEmbeddingEndpoint::new(
                        url,
                        args.api_key_env.as_deref(),
                        Duration::from_secs(args.timeout_secs),
                    )?;
                    let mut cached =
                        CachedEmbeddings::open(&embedder, &args.embeddings_model, &cache)?;
                    let mut store = EmbeddingStore::default();
                    let texts: Vec<String> = pool
                        .iter()
                        .map(|e| e.text.clone())
                        .chain(claims.iter().map(|c| c.text.clone()))
                        .collect();
                    let vectors = cached.embed_all(&texts)?;
                    for (id, vector) in pool
                        .iter()
                        .map(|e| e.claim_id.clone())
                        .chain(claims.iter().map(|c| c.claim_id.clone()))
                        .zip(vectors)
                    {
                        store.insert(id, vector);
                    }
                    prepare_icl_cells(
                        &claims,
                        &personas,
                        &IclStrategy::Nearest { store: &store },
                        args.k,
                        &pool,
                    )?
                }
            }
        }
    };

    let outcome = collect_prepared(&cells, &endpoint, &cfg, &args.out)?;

    let log_path = args.out.with_extension("failures.json");
    write_json(&log_path, &outcome)?;
    let mut manifest = RunManifest::new(
        "collect",
        serde_json::json!({
            "claims": args.claims.display().to_string(),
            "config": cfg,
            "templates": args.templates,
            "icl": args.icl.map(|m| format!("{m:?}")),
            "k": args.k,
            "sink": args.out.display().to_string(),
        }),
    );
    manifest.add_input(&args.claims)?;
    if let Some(pool) = &args.pool {
        manifest.add_input(pool)?;
    }
    manifest.write(&args.out.with_extension("manifest.json"))?;
    println!(
        "collect: {} new records, {} skipped, {} incomplete cells",
        outcome.new_records,
        outcome.skipped_existing,
        outcome.incomplete.len()
    );
    if outcome.complete() {
        Ok(EXIT_SUCCESS)
    } else {
        Ok(EXIT_PARTIAL_COLLECTION)
    }
}

fn cmd_weak(args: &WeakArgs) -> Result<i32, CliError> {
    let format = FormatArg::resolve(args.format, &args.input);
    let records = load_annotations(&args.input, format)?;
    let keys = consistency_partitions(&records, &args.partition);
    if keys.is_empty() {
        return Err(CliError::Validation(
            "no (model, prompt, topic) combinations with both gendered and base cells".into(),
        ));
    }

    let run_dir = args.out.run_dir();
    let check_dir = run_dir.join("qc1-weak");
    ensure_dir(&check_dir)?;

    let cfg_template = WeakTestConfig {
        thresholds: args.p0.clone(),
        alpha: args.alpha,
        bootstrap: BootstrapConfig::new(args.b, args.seed),
        eps: 1e-9,
    };
    let mut warnings_all = Vec::new();
    for key in &keys {
        let subset = consistency_subset(&records, key);
        let groups = group_conditions(&subset);
        let mut required: Vec<&str> = groups.iter().map(String::as_str).collect();
        required.push(BASE_CONDITION);
        let (dataset, warnings) =
            build_topic_dataset(&subset, &key.topic, &required, args.min_labels)?;
        warnings_all.extend(warnings.into_iter().map(|w| format!("{}: {w}", key.topic)));
        let report = weak_topic_test(&dataset, &cfg_template)?;
        let stored = StoredReport {
            model: key.model.clone(),
            prompt: key.prompt_label(),
            report,
        };
        write_json(
            &check_dir.join(panel_file_name(&key.model, &key.prompt_label(), &key.topic, "json")),
            &stored,
        )?;
    }

    let mut manifest = RunManifest::new(
        "qc1-weak",
        serde_json::json!({
            "input": args.input.display().to_string(),
            "seed": args.seed,
            "b": args.b,
            "p0": args.p0,
            "alpha": args.alpha,
            "min_labels": args.min_labels,
            "partitions": keys.len(),
            "warnings": warnings_all,
        }),
    );
    manifest.add_input(&args.input)?;
    manifest.write(&run_dir.join("manifest.json"))?;
    println!("qc1-weak: {} partitions -> {}", keys.len(), check_dir.display());
    Ok(EXIT_SUCCESS)
}

fn cmd_strong(args: &StrongArgs) -> Result<i32, CliError> {
    let format = FormatArg::resolve(args.format, &args.input);
    let records = load_annotations(&args.input, format)?;
    let keys = consistency_partitions(&records, &args.partition);
    if keys.is_empty() {
        return Err(CliError::Validation(
            "no (model, prompt, topic) combinations with both gendered and base cells".into(),
        ));
    }

    let run_dir = args.out.run_dir();
    let check_dir = run_dir.join("qc1-strong");
    ensure_dir(&check_dir)?;

    for key in &keys {
        let subset = consistency_subset(&records, key);
        let groups = group_conditions(&subset);
        let mut required: Vec<&str> = groups.iter().map(String::as_str).collect();
        required.push(BASE_CONDITION);
        let (dataset, _warnings) =
            build_topic_dataset(&subset, &key.topic, &required, args.min_labels)?;
        let grid = if dataset.groups().len() == 2 {
            two_group_grid(args.q0_step)
        } else {
            crate::consistency::simplex_grid(dataset.groups().len(), args.q0_step)
        };
        let cfg = StrongTestConfig {
            grid,
            alpha_star: args.alpha_star,
            bootstrap: BootstrapConfig::new(args.b, args.seed),
            eps: 1e-9,
        };
        let report = strong_topic_test(&dataset, &cfg)?;
        let stored = StoredReport {
            model: key.model.clone(),
            prompt: key.prompt_label(),
            report,
        };
        write_json(
            &check_dir.join(panel_file_name(&key.model, &key.prompt_label(), &key.topic, "json")),
            &stored,
        )?;
    }

    let mut manifest = RunManifest::new(
        "qc1-strong",
        serde_json::json!({
            "input": args.input.display().to_string(),
            "seed": args.seed,
            "b": args.b,
            "q0_step": args.q0_step,
            "alpha_star": args.alpha_star,
            "min_labels": args.min_labels,
            "partitions": keys.len(),
        }),
    );
    manifest.add_input(&args.input)?;
    manifest.write(&run_dir.join("manifest.json"))?;
    println!("qc1-strong: {} partitions -> {}", keys.len(), check_dir.display());
    Ok(EXIT_SUCCESS)
}

fn load_priors_file(path: &Path) -> Result<BTreeMap<String, PriorDirection>, CliError> {
    read_json(path)
}

fn cmd_qc2a(args: Qc2aArgs) -> Result<i32, CliError> {
    let format = FormatArg::resolve(args.format, &args.input);
    let records = load_annotations(&args.input, format)?;
    let order = GroupOrder {
        plus: args.g_plus.clone(),
        minus: args.g_minus.clone(),
    };
    let priors = match (&args.priors_file, args.prior) {
        (Some(path), _) => Some(load_priors_file(path)?),
        (None, Some(_)) => None,
        (None, None) => {
            return Err(CliError::Validation(
                "qc2a needs --prior or --priors-file".into(),
            ))
        }
    };

    let keys = alignment_partitions(&records, &args.partition, &order);
    if keys.is_empty() {
        return Err(CliError::Validation(
            "no (model, prompt, topic) combinations with both group conditions".into(),
        ));
    }

    let run_dir = args.out.run_dir();
    let check_dir = run_dir.join("qc2a");
    ensure_dir(&check_dir)?;

    let cfg = AlignmentConfig {
        alpha: args.alpha,
        group_order: order.clone(),
        ..AlignmentConfig::default()
    };
    let mut labeled = Vec::new();
    let mut skipped = Vec::new();
    for key in &keys {
        let direction = match &priors {
            Some(map) => match map.get(&key.topic) {
                Some(d) => *d,
                None => {
                    skipped.push(format!("{}: no prior in priors file", key.topic));
                    continue;
                }
            },
            None => args.prior.expect("validated above").into(),
        };
        let subset = alignment_subset(&records, key, &order);
        let (dataset, _warnings) = build_topic_dataset(
            &subset,
            &key.topic,
            &[&order.minus, &order.plus],
            args.min_labels,
        )?;
        let report = alignment_topic_test(
            &dataset,
            &ExpectedGapSource::PriorZero { direction },
            &cfg,
        )?;
        let stored = StoredReport {
            model: key.model.clone(),
            prompt: key.cond_prompt.clone(),
            report: report.clone(),
        };
        write_json(
            &check_dir.join(panel_file_name(&key.model, &key.cond_prompt, &key.topic, "json")),
            &stored,
        )?;
        labeled.push(LabeledAlignment {
            label: format!("{} [{}]", key.model, key.cond_prompt),
            report,
        });
    }
    if labeled.is_empty() {
        return Err(CliError::Validation("no topics had a prior to test".into()));
    }

    let tables = render_topic_tables(&labeled)?;
    std::fs::write(check_dir.join("tables.md"), &tables.markdown)?;
    std::fs::write(check_dir.join("tables.csv"), &tables.csv)?;
    std::fs::write(check_dir.join("tables.json"), &tables.json)?;

    let mut manifest = RunManifest::new(
        "qc2a",
        serde_json::json!({
            "input": args.input.display().to_string(),
            "alpha": args.alpha,
            "min_labels": args.min_labels,
            "g_plus": order.plus,
            "g_minus": order.minus,
            "skipped": skipped,
        }),
    );
    manifest.add_input(&args.input)?;
    manifest.write(&run_dir.join("manifest.json"))?;
    println!("qc2a: {} reports -> {}", labeled.len(), check_dir.display());
    Ok(EXIT_SUCCESS)
}

fn cmd_qc2b(args: Qc2bArgs) -> Result<i32, CliError> {
    let model_format = FormatArg::resolve(args.model_format, &args.model_input);
    let human_format = FormatArg::resolve(args.human_format, &args.human_input);
    let model_records = load_annotations(&args.model_input, model_format)?;
    let human_records: Vec<AnnotationRecord> = load_annotations(&args.human_input, human_format)?
        .into_iter()
        .filter(|r| r.source.is_human())
        .collect();
    let order = GroupOrder {
        plus: args.g_plus.clone(),
        minus: args.g_minus.clone(),
    };

    let keys = alignment_partitions(&model_records, &args.partition, &order);
    if keys.is_empty() {
        return Err(CliError::Validation(
            "no (model, prompt, topic) combinations with both group conditions".into(),
        ));
    }

    let run_dir = args.out.run_dir();
    let check_dir = run_dir.join("qc2b");
    ensure_dir(&check_dir)?;

    let cfg = AlignmentConfig {
        alpha: args.alpha,
        group_order: order.clone(),
        min_reference_labels: args.min_reference_labels,
        ..AlignmentConfig::default()
    };
    let mut labeled = Vec::new();
    let mut skipped = Vec::new();
    for key in &keys {
        let reference = match build_topic_dataset(
            &human_records,
            &key.topic,
            &[&order.minus, &order.plus],
            args.min_reference_labels.max(1),
        ) {
            Ok((dataset, _)) => dataset,
            Err(e) => {
                skipped.push(format!("{}: no usable human reference ({e})", key.topic));
                continue;
            }
        };
        let subset = alignment_subset(&model_records, key, &order);
        let (dataset, _warnings) = build_topic_dataset(
            &subset,
            &key.topic,
            &[&order.minus, &order.plus],
            args.min_labels,
        )?;
        let report = alignment_topic_test(
            &dataset,
            &ExpectedGapSource::HumanReference { reference },
            &cfg,
        )?;
        let stored = StoredReport {
            model: key.model.clone(),
            prompt: key.cond_prompt.clone(),
            report: report.clone(),
        };
        write_json(
            &check_dir.join(panel_file_name(&key.model, &key.cond_prompt, &key.topic, "json")),
            &stored,
        )?;
        labeled.push(LabeledAlignment {
            label: format!("{} [{}]", key.model, key.cond_prompt),
            report,
        });
    }
    if labeled.is_empty() {
        return Err(CliError::Validation(
            "no topics have both model and human reference data".into(),
        ));
    }

    let tables = render_topic_tables(&labeled)?;
    std::fs::write(check_dir.join("tables.md"), &tables.markdown)?;
    std::fs::write(check_dir.join("tables.csv"), &tables.csv)?;
    std::fs::write(check_dir.join("tables.json"), &tables.json)?;

    let mut manifest = RunManifest::new(
        "qc2b",
        serde_json::json!({
            "model_input": args.model_input.display().to_string(),
            "human_input": args.human_input.display().to_string(),
            "alpha": args.alpha,
            "min_labels": args.min_labels,
            "min_reference_labels": args.min_reference_labels,
            "g_plus": order.plus,
            "g_minus": order.minus,
            "skipped": skipped,
        }),
    );
    manifest.add_input(&args.model_input)?;
    manifest.add_input(&args.human_input)?;
    manifest.write(&run_dir.join("manifest.json"))?;
    println!("qc2b: {} reports -> {}", labeled.len(), check_dir.display());
    Ok(EXIT_SUCCESS)
}

/// Benchmark config entry: file lists per check.
#[derive(Debug, Deserialize)]
struct BenchmarkConfigEntry {
    method: String,
    weak: Vec<PathBuf>,
    strong: Vec<PathBuf>,
    qc2a: Vec<PathBuf>,
    qc2b: Vec<PathBuf>,
}

fn cmd_benchmark(args: BenchmarkArgs) -> Result<i32, CliError> {
    let entries: Vec<BenchmarkConfigEntry> = read_json(&args.config)?;
    let mut methods = Vec::new();
    for entry in &entries {
        let weak: Vec<WeakTestReport> = entry
            .weak
            .iter()
            .map(|p| read_json::<StoredReport<WeakTestReport>>(p).map(|s| s.report))
            .collect::<Result<_, _>>()?;
        let strong: Vec<StrongTestReport> = entry
            .strong
            .iter()
            .map(|p| read_json::<StoredReport<StrongTestReport>>(p).map(|s| s.report))
            .collect::<Result<_, _>>()?;
        let qc2a: Vec<AlignmentReport> = entry
            .qc2a
            .iter()
            .map(|p| read_json::<StoredReport<AlignmentReport>>(p).map(|s| s.report))
            .collect::<Result<_, _>>()?;
        let qc2b: Vec<AlignmentReport> = entry
            .qc2b
            .iter()
            .map(|p| read_json::<StoredReport<AlignmentReport>>(p).map(|s| s.report))
            .collect::<Result<_, _>>()?;
        methods.push(MethodReports {
            method: entry.method.clone(),
            weak,
            strong,
            qc2a,
            qc2b,
        });
    }
    let summary = benchmark_summary(&methods)?;

    let run_dir = args.out.run_dir();
    let check_dir = run_dir.join("benchmark");
    ensure_dir(&check_dir)?;
    write_json(&check_dir.join("summary.json"), &summary)?;
    std::fs::write(check_dir.join("summary.md"), summary.to_markdown())?;
    std::fs::write(check_dir.join("summary.csv"), summary.to_csv())?;

    let mut manifest = RunManifest::new(
        "benchmark",
        serde_json::json!({ "config": args.config.display().to_string() }),
    );
    manifest.add_input(&args.config)?;
    manifest.write(&run_dir.join("manifest.json"))?;
    println!("benchmark: {} methods -> {}", summary.rows.len(), check_dir.display());
    Ok(EXIT_SUCCESS)
}

fn cmd_calibrate(args: &CalibrateArgs) -> Result<i32, CliError> {
    let spec = SyntheticSpec::from_json(&std::fs::read_to_string(&args.spec)?)?;
    let test = match args.test {
        CalibrateTestArg::Weak => CalibrationTest::Weak(WeakTestConfig {
            thresholds: args.p0.clone(),
            alpha: args.alpha,
            bootstrap: BootstrapConfig::new(args.b, 0),
            eps: 1e-9,
        }),
        CalibrateTestArg::Strong => {
            let grid = if args.q0.is_empty() {
                two_group_grid(args.q0_step)
            } else {
                args.q0.iter().map(|&q| vec![q, 1.0 - q]).collect()
            };
            CalibrationTest::Strong(StrongTestConfig {
                grid,
                alpha_star: args.alpha_star,
                bootstrap: BootstrapConfig::new(args.b, 0),
                eps: 1e-9,
            })
        }
        CalibrateTestArg::Alignment => CalibrationTest::Alignment(
            AlignmentConfig {
                alpha: args.alpha,
                ..AlignmentConfig::default()
            },
            args.prior.into(),
        ),
    };
    let summary = run_calibration(&spec, &test, args.runs)?;

    let run_dir = args.out.run_dir();
    let check_dir = run_dir.join("calibrate");
    ensure_dir(&check_dir)?;
    write_json(&check_dir.join("summary.json"), &summary)?;
    let mut md = String::from("| Key | Rejections | Rate | 95% CI |\n|---|---|---|---|\n");
    for e in &summary.entries {
        md.push_str(&format!(
            "| {} | {}/{} | {:.4} | [{:.4}, {:.4}] |\n",
            e.key, e.rejections, summary.runs, e.rate, e.ci_low, e.ci_high
        ));
    }
    std::fs::write(check_dir.join("summary.md"), md)?;

    let mut manifest = RunManifest::new(
        "calibrate",
        serde_json::json!({
            "spec": args.spec.display().to_string(),
            "test": format!("{:?}", args.test),
            "runs": args.runs,
            "b": args.b,
        }),
    );
    manifest.add_input(&args.spec)?;
    manifest.write(&run_dir.join("manifest.json"))?;
    println!("calibrate: {} entries -> {}", summary.entries.len(), check_dir.display());
    Ok(EXIT_SUCCESS)
}

fn cmd_report(args: ReportArgs) -> Result<i32, CliError> {
    let run_dir = args.out.run_dir();
    match args.kind {
        ReportKindArg::Tables => {
            let mut labeled = Vec::new();
            for path in &args.alignment {
                let stored: StoredReport<AlignmentReport> = read_json(path)?;
                labeled.push(LabeledAlignment {
                    label: format!("{} [{}]", stored.model, stored.prompt),
                    report: stored.report,
                });
            }
            let tables = render_topic_tables(&labeled)?;
            let check_dir = run_dir.join("tables");
            ensure_dir(&check_dir)?;
            std::fs::write(check_dir.join("tables.md"), &tables.markdown)?;
            std::fs::write(check_dir.join("tables.csv"), &tables.csv)?;
            std::fs::write(check_dir.join("tables.json"), &tables.json)?;
            println!("report: tables -> {}", check_dir.display());
        }
        ReportKindArg::Feasibility => {
            let mut weak_by_key: BTreeMap<(String, String, String), StoredReport<WeakTestReport>> =
                BTreeMap::new();
            for path in &args.weak {
                let stored: StoredReport<WeakTestReport> = read_json(path)?;
                weak_by_key.insert(
                    (stored.model.clone(), stored.prompt.clone(), stored.report.topic.clone()),
                    stored,
                );
            }
            let mut panels = Vec::new();
            for path in &args.strong {
                let stored: StoredReport<StrongTestReport> = read_json(path)?;
                let key = (
                    stored.model.clone(),
                    stored.prompt.clone(),
                    stored.report.topic.clone(),
                );
                let Some(weak) = weak_by_key.get(&key) else {
                    return Err(CliError::Validation(format!(
                        "no weak report for model={} prompt={} topic={}",
                        key.0, key.1, key.2
                    )));
                };
                panels.push(feasibility_panel(
                    &key.0,
                    &key.1,
                    &weak.report,
                    &stored.report,
                ));
            }
            let check_dir = run_dir.join("feasibility");
            ensure_dir(&check_dir)?;
            // One SVG/JSON pair per panel plus a combined overview.
            for panel in &panels {
                let (svg, json) = emit_feasibility(std::slice::from_ref(panel))?;
                let svg_name = panel_file_name(&panel.model, &panel.prompt, &panel.topic, "svg");
                let json_name = panel_file_name(&panel.model, &panel.prompt, &panel.topic, "json");
                std::fs::write(check_dir.join(svg_name), svg)?;
                std::fs::write(check_dir.join(json_name), json)?;
            }
            let (svg, json) = emit_feasibility(&panels)?;
            std::fs::write(check_dir.join("feasibility.svg"), svg)?;
            std::fs::write(check_dir.join("feasibility.json"), json)?;
            println!("report: {} panels -> {}", panels.len(), check_dir.display());
        }
    }
    Ok(EXIT_SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Veracity;

    fn model_rec(
        model: &str,
        prompt: &str,
        topic: &str,
        claim: &str,
        cond: &str,
        label: u8,
        idx: usize,
    ) -> AnnotationRecord {
        AnnotationRecord {
            claim_id: claim.into(),
            topic: topic.into(),
            veracity: Veracity::Unknown,
            condition: cond.into(),
            source: Source::Model {
                name: model.into(),
                prompt_id: prompt.into(),
            },
            label,
            annotator_id: format!("s{idx}"),
        }
    }

    fn sample_records() -> Vec<AnnotationRecord> {
        let mut recs = Vec::new();
        for claim in ["c1", "c2"] {
            for i in 0..2 {
                recs.push(model_rec("gpt", "cond1", "T", claim, "man", 2, i));
                recs.push(model_rec("gpt", "cond1", "T", claim, "woman", 4, i));
                recs.push(model_rec("gpt", "base1", "T", claim, "base", 3, i));
                recs.push(model_rec("gpt", "base4", "T", claim, "base", 3, i));
            }
        }
        recs
    }

    #[test]
    fn partitions_cross_cond_and_base_prompts() {
        let recs = sample_records();
        let keys = consistency_partitions(&recs, &PartitionArgs {
            models: vec![],
            cond_prompts: vec![],
            base_prompts: vec![],
            topics: vec![],
        });
        assert_eq!(keys.len(), 2);
        assert_eq!(keys[0].cond_prompt, "cond1");
        assert_eq!(keys[0].base_prompt, "base1");
        assert_eq!(keys[1].base_prompt, "base4");
        assert_eq!(keys[0].prompt_label(), "cond1-base1");
    }

    #[test]
    fn partition_filters_apply() {
        let recs = sample_records();
        let keys = consistency_partitions(&recs, &PartitionArgs {
            models: vec!["other".into()],
            cond_prompts: vec![],
            base_prompts: vec![],
            topics: vec![],
        });
        assert!(keys.is_empty());
        let keys = consistency_partitions(&recs, &PartitionArgs {
            models: vec![],
            cond_prompts: vec![],
            base_prompts: vec!["base4".into()],
            topics: vec![],
        });
        assert_eq!(keys.len(), 1);
    }

    #[test]
    fn subset_mixes_prompts_correctly() {
        let recs = sample_records();
        let key = ConsistencyKey {
            model: "gpt".into(),
            cond_prompt: "cond1".into(),
            base_prompt: "base4".into(),
            topic: "T".into(),
        };
        let subset = consistency_subset(&recs, &key);
        // 2 claims × (2 man + 2 woman + 2 base) = 12.
        assert_eq!(subset.len(), 12);
        for r in &subset {
            let prompt = r.source.prompt_id().unwrap();
            if r.condition == "base" {
                assert_eq!(prompt, "base4");
            } else {
                assert_eq!(prompt, "cond1");
            }
        }
        assert_eq!(group_conditions(&subset), vec!["man".to_string(), "woman".to_string()]);
    }

    #[test]
    fn alignment_partitions_ignore_base() {
        let recs = sample_records();
        let keys = alignment_partitions(
            &recs,
            &PartitionArgs {
                models: vec![],
                cond_prompts: vec![],
                base_prompts: vec![],
                topics: vec![],
            },
            &GroupOrder::default(),
        );
        assert_eq!(keys.len(), 1);
        assert_eq!(keys[0].cond_prompt, "cond1");
        let subset = alignment_subset(&recs, &keys[0], &GroupOrder::default());
        assert_eq!(subset.len(), 8);
    }

    #[test]
    fn sanitize_keeps_names_flat() {
        assert_eq!(sanitize("gpt-3.5a"), "gpt-3.5a");
        assert_eq!(sanitize("Cond. Prompt 1"), "Cond._Prompt_1");
        assert_eq!(sanitize("a/b\\c"), "a_b_c");
    }

    #[test]
    fn unknown_flags_exit_with_validation_code() {
        assert_eq!(run(["opinion-qc", "qc1-weak", "--nope"]), EXIT_VALIDATION);
        assert_eq!(run(["opinion-qc", "not-a-command"]), EXIT_VALIDATION);
        assert_eq!(run(["opinion-qc", "--help"]), EXIT_SUCCESS);
    }
}

//! Response collection: render prompts, query a chat endpoint, parse Likert
//! answers, and append validated records to a JSONL sink.
//!
//! Collection is resumable: the sink is re-read on startup and completed
//! samples — keyed by (claim, condition, prompt, sample index) — are never
//! collected twice.

mod http;
mod icl;
mod parse;
mod prompt;

pub use http::{
    CachedEmbeddings, ChatEndpoint, ChatMessage, ChatRequest, EmbeddingEndpoint,
    HttpChatEndpoint, HttpEmbeddingEndpoint, TransportError,
};
pub use icl::{
    build_icl_prompt, cosine_similarity, select_icl_examples, EmbeddingStore, IclExample,
    IclSelector, ICL_SYSTEM_MESSAGE,
};
pub use parse::parse_likert;
pub use prompt::{
    builtin_template, builtin_template_ids, render_prompt, resolve_templates, ChatPrompt,
    PromptTemplate,
};

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::record_to_json_line;
use crate::model::{AnnotationRecord, ModelError, Source, Veracity, BASE_CONDITION};

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("unknown template id {0:?}")]
    UnknownTemplate(String),
    #[error("unresolved placeholder: {0}")]
    UnresolvedPlaceholder(String),
    #[error("no Likert label in response {0:?}")]
    NoLabelInResponse(String),
    #[error("ambiguous response: both {first} and {second} in {response:?}")]
    AmbiguousResponse {
        first: u8,
        second: u8,
        response: String,
    },
    #[error("example pool has {available} eligible claims, need {requested}")]
    PoolTooSmall { available: usize, requested: usize },
    #[error("no embedding for claim {0:?}")]
    MissingEmbedding(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("cannot use sink {path}: {message}")]
    Sink { path: String, message: String },
    #[error("invalid collector configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
}

/// Persona a prompt is conditioned on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Persona {
    Man,
    Woman,
    /// The average/neutral condition (base prompts, ICL "Average").
    Base,
}

impl Persona {
    pub fn condition(&self) -> &'static str {
        match self {
            Persona::Man => "man",
            Persona::Woman => "woman",
            Persona::Base => BASE_CONDITION,
        }
    }

    pub fn gender_word(&self) -> Option<&'static str> {
        match self {
            Persona::Man => Some("man"),
            Persona::Woman => Some("woman"),
            Persona::Base => None,
        }
    }

    pub fn icl_label(&self) -> &'static str {
        match self {
            Persona::Man => "Man",
            Persona::Woman => "Woman",
            Persona::Base => "Average",
        }
    }

    pub fn parse(raw: &str) -> Result<Self, CollectError> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "man" => Ok(Persona::Man),
            "woman" => Ok(Persona::Woman),
            "base" | "average" => Ok(Persona::Base),
            other => Err(CollectError::InvalidConfig(format!(
                "unknown persona {other:?}"
            ))),
        }
    }
}

/// A claim to collect responses for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimInput {
    pub claim_id: String,
    pub topic: String,
    pub veracity: Veracity,
    pub text: String,
}

/// Load claims from a CSV with header `claim_id,topic,veracity,text`.
pub fn load_claims(path: &Path) -> Result<Vec<ClaimInput>, CollectError> {
    #[derive(Deserialize)]
    struct Row {
        claim_id: String,
        topic: String,
        veracity: String,
        text: String,
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| CollectError::Sink {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut claims = Vec::new();
    for (idx, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| CollectError::Sink {
            path: path.display().to_string(),
            message: format!("row {}: {e}", idx + 2),
        })?;
        claims.push(ClaimInput {
            claim_id: row.claim_id,
            topic: row.topic,
            veracity: Veracity::parse(&row.veracity)?,
            text: row.text,
        });
    }
    Ok(claims)
}

/// Endpoint, sampling, and retry settings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollectorConfig {
    pub endpoint_url: String,
    pub model: String,
    /// Sampling temperature τ.
    pub temperature: f64,
    /// Target labels per (claim, persona, template) cell.
    pub samples_per_cell: usize,
    /// Retries per sample beyond the first attempt; transport errors and
    /// parse failures share the budget.
    pub max_retries: usize,
    pub timeout_secs: u64,
    /// Environment variable holding the API key, if the endpoint needs one.
    pub api_key_env: Option<String>,
    pub request_parallelism: usize,
}

impl CollectorConfig {
    pub fn new(model: &str) -> Self {
        Self {
            endpoint_url: String::new(),
            model: model.to_string(),
            temperature: 0.5,
            samples_per_cell: 10,
            max_retries: 3,
            timeout_secs: 30,
            api_key_env: None,
            request_parallelism: 1,
        }
    }

    /// Build the HTTP endpoint this configuration points at.
    pub fn endpoint(&self) -> Result<HttpChatEndpoint, TransportError> {
        HttpChatEndpoint::new(
            &self.endpoint_url,
            self.api_key_env.as_deref(),
            std::time::Duration::from_secs(self.timeout_secs),
        )
    }

    pub fn validate(&self) -> Result<(), CollectError> {
        if self.model.is_empty() {
            return Err(CollectError::InvalidConfig("empty model name".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(CollectError::InvalidConfig(format!(
                "temperature {} must be ≥ 0",
                self.temperature
            )));
        }
        if self.samples_per_cell == 0 {
            return Err(CollectError::InvalidConfig(
                "samples_per_cell must be ≥ 1".into(),
            ));
        }
        if self.request_parallelism == 0 {
            return Err(CollectError::InvalidConfig(
                "request_parallelism must be ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// One failed attempt, kept for the failure log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryEvent {
    pub claim_id: String,
    pub condition: String,
    pub prompt_id: String,
    pub sample_index: usize,
    pub attempt: usize,
    pub error: String,
}

/// A cell that ended the run short of its sample target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellShortfall {
    pub claim_id: String,
    pub condition: String,
    pub prompt_id: String,
    pub collected: usize,
    pub requested: usize,
    pub last_error: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CollectOutcome {
    pub new_records: usize,
    pub skipped_existing: usize,
    pub retries: Vec<RetryEvent>,
    pub incomplete: Vec<CellShortfall>,
}

impl CollectOutcome {
    pub fn complete(&self) -> bool {
        self.incomplete.is_empty()
    }
}

/// A fully rendered collection unit: one (claim, condition, prompt) cell.
#[derive(Clone, Debug)]
pub struct PreparedCell {
    pub claim: ClaimInput,
    pub condition: String,
    pub prompt_id: String,
    pub prompt: ChatPrompt,
}

/// Expand (claims × templates × personas) into cells. Conditional templates
/// pair with the man/woman personas; base templates produce a single `base`
/// cell per claim regardless of the persona list.
pub fn prepare_template_cells(
    claims: &[ClaimInput],
    personas: &[Persona],
    templates: &[PromptTemplate],
) -> Result<Vec<PreparedCell>, CollectError> {
    let mut cells = Vec::new();
    for claim in claims {
        for template in templates {
            if template.takes_gender() {
                for persona in personas {
                    if persona.gender_word().is_some() {
                        cells.push(PreparedCell {
                            claim: claim.clone(),
                            condition: persona.condition().to_string(),
                            prompt_id: template.id.clone(),
                            prompt: render_prompt(template, &claim.text, *persona)?,
                        });
                    }
                }
            } else {
                cells.push(PreparedCell {
                    claim: claim.clone(),
                    condition: BASE_CONDITION.to_string(),
                    prompt_id: template.id.clone(),
                    prompt: render_prompt(template, &claim.text, Persona::Base)?,
                });
            }
        }
    }
    Ok(cells)
}

/// How in-context examples are picked during collection.
pub enum IclStrategy<'a> {
    /// Uniform example draws, seeded per (claim, persona).
    Random { seed: u64 },
    /// Nearest neighbors by cosine similarity over the store.
    Nearest { store: &'a EmbeddingStore },
}

impl IclStrategy<'_> {
    pub fn prompt_id(&self) -> &'static str {
        match self {
            IclStrategy::Random { .. } => "icl_random",
            IclStrategy::Nearest { .. } => "icl_knn",
        }
    }
}

/// Expand (claims × personas) into in-context cells over the example pool.
pub fn prepare_icl_cells(
    claims: &[ClaimInput],
    personas: &[Persona],
    strategy: &IclStrategy,
    k: usize,
    pool: &[IclExample],
) -> Result<Vec<PreparedCell>, CollectError> {
    let prompt_id = strategy.prompt_id();
    let mut cells = Vec::new();
    for claim in claims {
        for persona in personas {
            let prompt = match strategy {
                IclStrategy::Random { seed } => {
                    let mut rng = crate::stats::derive_rng(
                        *seed,
                        &["icl", &claim.claim_id, persona.condition()],
                    );
                    build_icl_prompt(
                        &mut IclSelector::Random(&mut rng),
                        k,
                        pool,
                        &claim.claim_id,
                        &claim.text,
                        *persona,
                    )?
                }
                IclStrategy::Nearest { store } => build_icl_prompt(
                    &mut IclSelector::Nearest(store),
                    k,
                    pool,
                    &claim.claim_id,
                    &claim.text,
                    *persona,
                )?,
            };
            cells.push(PreparedCell {
                claim: claim.clone(),
                condition: persona.condition().to_string(),
                prompt_id: prompt_id.to_string(),
                prompt,
            });
        }
    }
    Ok(cells)
}

/// Index of already-collected sample indices per cell, read from the sink.
///
/// A crash can leave a torn final line; compact the sink down to its valid
/// records before appending so the file stays loadable end to end. Torn
/// samples were never counted as collected and are simply redone.
fn existing_samples(
    sink_path: &Path,
    model: &str,
) -> Result<BTreeMap<(String, String, String), BTreeSet<usize>>, CollectError> {
    let mut existing: BTreeMap<(String, String, String), BTreeSet<usize>> = BTreeMap::new();
    if !sink_path.exists() {
        return Ok(existing);
    }
    let text = std::fs::read_to_string(sink_path).map_err(|e| CollectError::Sink {
        path: sink_path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut valid_lines = Vec::new();
    let mut dropped = 0usize;
    let mut records = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<crate::model::RawRecord>(line)
            .map_err(|_| ())
            .and_then(|raw| crate::model::validate_record(&raw).map_err(|_| ()))
        {
            Ok(record) => {
                valid_lines.push(line.to_string());
                records.push(record);
            }
            Err(()) => dropped += 1,
        }
    }
    if dropped > 0 {
        let tmp = sink_path.with_extension("jsonl.compact");
        let mut body = valid_lines.join("\n");
        if !body.is_empty() {
            body.push('\n');
        }
        std::fs::write(&tmp, body).map_err(|e| CollectError::Sink {
            path: tmp.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::rename(&tmp, sink_path).map_err(|e| CollectError::Sink {
            path: sink_path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    for rec in records {
        let Source::Model { name, prompt_id } = &rec.source else {
            continue;
        };
        if name != model {
            continue;
        }
        let Some(index) = rec
            .annotator_id
            .strip_prefix('s')
            .and_then(|s| s.parse::<usize>().ok())
        else {
            continue;
        };
        existing
            .entry((rec.claim_id.clone(), rec.condition.clone(), prompt_id.clone()))
            .or_default()
            .insert(index);
    }
    Ok(existing)
}

/// Collect `samples_per_cell` labels for every (claim, persona, template)
/// cell, appending records to the JSONL sink as they arrive.
///
/// Transport errors and unparseable responses are retried up to
/// `max_retries` per sample; when a sample exhausts its budget the cell is
/// left incomplete and the run continues. Authentication failures abort.
pub fn collect(
    claims: &[ClaimInput],
    personas: &[Persona],
    templates: &[PromptTemplate],
    endpoint: &dyn ChatEndpoint,
    cfg: &CollectorConfig,
    sink_path: &Path,
) -> Result<CollectOutcome, CollectError> {
    let cells = prepare_template_cells(claims, personas, templates)?;
    collect_prepared(&cells, endpoint, cfg, sink_path)
}

/// Collect over pre-rendered cells (template or in-context prompts alike).
pub fn collect_prepared(
    cells: &[PreparedCell],
    endpoint: &dyn ChatEndpoint,
    cfg: &CollectorConfig,
    sink_path: &Path,
) -> Result<CollectOutcome, CollectError> {
    cfg.validate()?;
    let existing = existing_samples(sink_path, &cfg.model)?;

    let sink_file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(sink_path)
        .map_err(|e| CollectError::Sink {
            path: sink_path.display().to_string(),
            message: e.to_string(),
        })?;
    let sink = Mutex::new(sink_file);
    let outcome = Mutex::new(CollectOutcome::default());
    let fatal: Mutex<Option<CollectError>> = Mutex::new(None);

    let run_cell = |cell: &PreparedCell| {
        if fatal.lock().unwrap().is_some() {
            return;
        }
        let condition = cell.condition.as_str();
        let key = (
            cell.claim.claim_id.clone(),
            condition.to_string(),
            cell.prompt_id.clone(),
        );
        let done = existing.get(&key).cloned().unwrap_or_default();
        {
            let mut out = outcome.lock().unwrap();
            out.skipped_existing += done
                .iter()
                .filter(|&&i| i < cfg.samples_per_cell)
                .count();
        }

        let request = ChatRequest::from_prompt(&cfg.model, &cell.prompt, cfg.temperature);

        for sample_index in (0..cfg.samples_per_cell).filter(|i| !done.contains(i)) {
            let mut last_error = String::new();
            let mut succeeded = false;
            for attempt in 0..=cfg.max_retries {
                let parsed = endpoint
                    .complete(&request)
                    .map_err(|e| {
                        if e.is_fatal() {
                            *fatal.lock().unwrap() = Some(CollectError::Auth(e.to_string()));
                        }
                        CollectError::Sink {
                            path: String::new(),
                            message: e.to_string(),
                        }
                    })
                    .and_then(|text| parse_likert(&text));
                if fatal.lock().unwrap().is_some() {
                    return;
                }
                match parsed {
                    Ok(label) => {
                        let record = AnnotationRecord {
                            claim_id: cell.claim.claim_id.clone(),
                            topic: cell.claim.topic.clone(),
                            veracity: cell.claim.veracity,
                            condition: condition.to_string(),
                            source: Source::Model {
                                name: cfg.model.clone(),
                                prompt_id: cell.prompt_id.clone(),
                            },
                            label,
                            annotator_id: format!("s{sample_index}"),
                        };
                        let line = record_to_json_line(&record);
                        {
                            let mut file = sink.lock().unwrap();
                            if let Err(e) = writeln!(file, "{line}").and_then(|_| file.flush()) {
                                *fatal.lock().unwrap() = Some(CollectError::Sink {
                                    path: sink_path.display().to_string(),
                                    message: e.to_string(),
                                });
                                return;
                            }
                        }
                        outcome.lock().unwrap().new_records += 1;
                        succeeded = true;
                        break;
                    }
                    Err(e) => {
                        last_error = match &e {
                            CollectError::Sink { message, .. } => message.clone(),
                            other => other.to_string(),
                        };
                        if attempt < cfg.max_retries {
                            outcome.lock().unwrap().retries.push(RetryEvent {
                                claim_id: cell.claim.claim_id.clone(),
                                condition: condition.to_string(),
                                prompt_id: cell.prompt_id.clone(),
                                sample_index,
                                attempt: attempt + 1,
                                error: last_error.clone(),
                            });
                        }
                    }
                }
            }
            if !succeeded {
                let collected = done.iter().filter(|&&i| i < cfg.samples_per_cell).count()
                    + (0..sample_index).filter(|i| !done.contains(i)).count();
                outcome.lock().unwrap().incomplete.push(CellShortfall {
                    claim_id: cell.claim.claim_id.clone(),
                    condition: condition.to_string(),
                    prompt_id: cell.prompt_id.clone(),
                    collected,
                    requested: cfg.samples_per_cell,
                    last_error,
                });
                // A sample that exhausts retries leaves the whole cell
                // short; move on to the next cell.
                return;
            }
        }
    };

    if cfg.request_parallelism > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.request_parallelism)
            .build()
            .map_err(|e| CollectError::InvalidConfig(e.to_string()))?;
        pool.install(|| {
            rayon::scope(|scope| {
                for cell in cells {
                    scope.spawn(|_| run_cell(cell));
                }
            })
        });
    } else {
        for cell in cells {
            run_cell(cell);
        }
    }

    if let Some(err) = fatal.into_inner().unwrap() {
        return Err(err);
    }
    let mut outcome = outcome.into_inner().unwrap();
    // Event order must not depend on scheduling.
    outcome.retries.sort_by(|a, b| {
        (&a.claim_id, &a.condition, &a.prompt_id, a.sample_index, a.attempt)
            .cmp(&(&b.claim_id, &b.condition, &b.prompt_id, b.sample_index, b.attempt))
    });
    outcome.incomplete.sort_by(|a, b| {
        (&a.claim_id, &a.condition, &a.prompt_id)
            .cmp(&(&b.claim_id, &b.condition, &b.prompt_id))
    });
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{load_annotations, AnnotationFormat};
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Endpoint that replays a fixed script of responses.
    struct ScriptedEndpoint {
        script: Vec<Result<String, TransportError>>,
        cursor: AtomicUsize,
        fallback: String,
    }

    impl ScriptedEndpoint {
        fn new(script: Vec<Result<String, TransportError>>, fallback: &str) -> Self {
            Self {
                script,
                cursor: AtomicUsize::new(0),
                fallback: fallback.to_string(),
            }
        }
    }

    impl ChatEndpoint for ScriptedEndpoint {
        fn complete(&self, _request: &ChatRequest) -> Result<String, TransportError> {
            let i = self.cursor.fetch_add(1, Ordering::SeqCst);
            match self.script.get(i) {
                Some(Ok(s)) => Ok(s.clone()),
                Some(Err(TransportError::Http { status })) => {
                    Err(TransportError::Http { status: *status })
                }
                Some(Err(TransportError::Auth(m))) => Err(TransportError::Auth(m.clone())),
                Some(Err(TransportError::Network(m))) => Err(TransportError::Network(m.clone())),
                Some(Err(TransportError::MalformedResponse(m))) => {
                    Err(TransportError::MalformedResponse(m.clone()))
                }
                None => Ok(self.fallback.clone()),
            }
        }
    }

    fn claim(id: &str) -> ClaimInput {
        ClaimInput {
            claim_id: id.into(),
            topic: "T".into(),
            veracity: Veracity::False,
            text: format!("claim text {id}"),
        }
    }

    fn one_cell_setup() -> (Vec<ClaimInput>, Vec<Persona>, Vec<PromptTemplate>) {
        (
            vec![claim("c1")],
            vec![Persona::Man],
            vec![builtin_template("cond1").unwrap()],
        )
    }

    #[test]
    fn constant_endpoint_fills_cells() {
        let dir = tempfile::tempdir().unwrap();
        let sink = dir.path().join("out.jsonl");
        let (claims, personas, templates) = one_cell_setup();
        let endpoint = ScriptedEndpoint::new(vec![], "3");
        let mut cfg = CollectorConfig::new("m");
        cfg.samples_per_cell = 4;
        let outcome = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
        assert_eq!(outcome.new_records, 4);
        assert!(outcome.complete());
        let records = load_annotations(&sink, AnnotationFormat::Jsonl).unwrap();
        assert_eq!(records.len(), 4);
        assert!(records.iter().all(|r| r.label == 3 && r.condition == "man"));
        assert_eq!(records[0].source.prompt_id(), Some("cond1"));
    }

    #[test]
    fn retries_then_succeeds() {
        let dir = tempfile::tempdir().unwrap();
        let sink = dir.path().join("out.jsonl");
        let (claims, personas, templates) = one_cell_setup();
        let endpoint = ScriptedEndpoint::new(
            vec![
                Err(TransportError::Http { status: 500 }),
                Err(TransportError::Network("reset".into())),
                Ok("4".into()),
            ],
            "4",
        );
        let mut cfg = CollectorConfig::new("m");
        cfg.samples_per_cell = 1;
        cfg.max_retries = 3;
        let outcome = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
        assert_eq!(outcome.new_records, 1);
        assert_eq!(outcome.retries.len(), 2);
        assert!(outcome.complete());
    }

    #[test]
    fn unparseable_forever_leaves_cell_incomplete() {
        let dir = tempfile::tempdir().unwrap();
        let sink = dir.path().join("out.jsonl");
        let (claims, personas, templates) = one_cell_setup();
        let endpoint = ScriptedEndpoint::new(vec![], "0");
        let mut cfg = CollectorConfig::new("m");
        cfg.samples_per_cell = 3;
        cfg.max_retries = 2;
        let outcome = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
        assert_eq!(outcome.new_records, 0);
        assert_eq!(outcome.incomplete.len(), 1);
        let short = &outcome.incomplete[0];
        assert_eq!(short.collected, 0);
        assert_eq!(short.requested, 3);
        assert!(short.last_error.contains("no Likert label"));
        // 1 first attempt + 2 retries, only retries logged.
        assert_eq!(outcome.retries.len(), 2);
    }

    #[test]
    fn resume_skips_completed_samples() {
        let dir = tempfile::tempdir().unwrap();
        let sink = dir.path().join("out.jsonl");
        let (claims, personas, templates) = one_cell_setup();
        let mut cfg = CollectorConfig::new("m");
        cfg.samples_per_cell = 5;

        let endpoint = ScriptedEndpoint::new(
            vec![Ok("2".into()), Ok("2".into()), Ok("2".into())],
            "_unparseable_",
        );
        // First run collects 3 then dies on parse failures.
        cfg.max_retries = 0;
        let first = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
        assert_eq!(first.new_records, 3);
        assert_eq!(first.incomplete.len(), 1);

        // Second run finishes the cell without re-collecting s0..s2.
        let endpoint = ScriptedEndpoint::new(vec![], "5");
        let second = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
        assert_eq!(second.skipped_existing, 3);
        assert_eq!(second.new_records, 2);
        assert!(second.complete());

        let records = load_annotations(&sink, AnnotationFormat::Jsonl).unwrap();
        assert_eq!(records.len(), 5);
        let indices: BTreeSet<&str> =
            records.iter().map(|r| r.annotator_id.as_str()).collect();
        assert_eq!(indices.len(), 5);

        // A third run is a no-op.
        let third = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
        assert_eq!(third.new_records, 0);
        assert_eq!(third.skipped_existing, 5);
    }

    #[test]
    fn base_templates_collapse_personas() {
        let dir = tempfile::tempdir().unwrap();
        let sink = dir.path().join("out.jsonl");
        let claims = vec![claim("c1")];
        let personas = vec![Persona::Man, Persona::Woman];
        let templates = vec![
            builtin_template("cond1").unwrap(),
            builtin_template("base4").unwrap(),
        ];
        let endpoint = ScriptedEndpoint::new(vec![], "6");
        let mut cfg = CollectorConfig::new("m");
        cfg.samples_per_cell = 2;
        let outcome = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
        // cond1 × {man, woman} + base4 × {base} = 3 cells of 2.
        assert_eq!(outcome.new_records, 6);
        let records = load_annotations(&sink, AnnotationFormat::Jsonl).unwrap();
        let conditions: Vec<&str> = records.iter().map(|r| r.condition.as_str()).collect();
        assert_eq!(conditions.iter().filter(|c| **c == "man").count(), 2);
        assert_eq!(conditions.iter().filter(|c| **c == "woman").count(), 2);
        assert_eq!(conditions.iter().filter(|c| **c == "base").count(), 2);
        let base_rec = records.iter().find(|r| r.condition == "base").unwrap();
        assert_eq!(base_rec.source.prompt_id(), Some("base4"));
    }

    #[test]
    fn torn_trailing_line_is_compacted_on_resume() {
        let dir = tempfile::tempdir().unwrap();
        let sink = dir.path().join("out.jsonl");
        let (claims, personas, templates) = one_cell_setup();
        let mut cfg = CollectorConfig::new("m");
        cfg.samples_per_cell = 3;

        let endpoint = ScriptedEndpoint::new(vec![], "1");
        collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
        // Simulate a crash mid-append.
        let mut text = std::fs::read_to_string(&sink).unwrap();
        text.push_str("{\"claim_id\":\"c1\",\"topic\":\"T\"");
        std::fs::write(&sink, text).unwrap();

        let endpoint = ScriptedEndpoint::new(vec![], "6");
        let outcome = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap();
        assert_eq!(outcome.skipped_existing, 3);
        assert_eq!(outcome.new_records, 0);
        // The sink is fully loadable again.
        let records = load_annotations(&sink, AnnotationFormat::Jsonl).unwrap();
        assert_eq!(records.len(), 3);
    }

    #[test]
    fn auth_failure_aborts() {
        let dir = tempfile::tempdir().unwrap();
        let sink = dir.path().join("out.jsonl");
        let (claims, personas, templates) = one_cell_setup();
        let endpoint =
            ScriptedEndpoint::new(vec![Err(TransportError::Auth("401".into()))], "3");
        let cfg = CollectorConfig::new("m");
        let err = collect(&claims, &personas, &templates, &endpoint, &cfg, &sink).unwrap_err();
        assert!(matches!(err, CollectError::Auth(_)));
    }
}

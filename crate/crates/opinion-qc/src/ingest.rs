//! Reading annotation files, the gold-question worker-quality filter, and
//! dataset summaries.
//!
//! CSV schema (header required):
//! `claim_id,topic,veracity,condition,source,prompt_id,annotator_id,label`.
//! JSONL carries one object per line with the same field names.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_record, AnnotationRecord, ModelError, RawRecord};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: row {row}: {source}")]
    BadRow {
        path: String,
        row: u64,
        source: ModelError,
    },
    #[error("{path}: row {row}: schema mismatch: {message}")]
    Schema {
        path: String,
        row: u64,
        message: String,
    },
    #[error("accuracy threshold {0} outside [0, 1]")]
    BadThreshold(f64),
    #[error("no gold claims present in the records")]
    NoGoldClaims,
    #[error("no records to summarize")]
    EmptyInput,
}

/// File formats the loader understands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationFormat {
    Csv,
    Jsonl,
}

impl AnnotationFormat {
    /// Infer from the file extension; defaults to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => AnnotationFormat::Jsonl,
            _ => AnnotationFormat::Csv,
        }
    }
}

/// Load and validate annotations, failing fast with the offending row.
/// Row numbers are 1-based file lines (the CSV header is line 1).
pub fn load_annotations(
    path: &Path,
    format: AnnotationFormat,
) -> Result<Vec<AnnotationRecord>, IngestError> {
    let display = path.display().to_string();
    let io_err = |source| IngestError::Io {
        path: display.clone(),
        source,
    };
    match format {
        AnnotationFormat::Csv => {
            let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => io_err(source),
                other => IngestError::Schema {
                    path: display.clone(),
                    row: 1,
                    message: format!("{other:?}"),
                },
            })?;
            let mut records = Vec::new();
            for result in reader.deserialize::<RawRecord>() {
                match result {
                    Ok(raw) => {
                        // Position points at the start of the *next* record,
                        // so count rows ourselves: header is line 1.
                        let row = records.len() as u64 + 2;
                        let record = validate_record(&raw).map_err(|source| {
                            IngestError::BadRow {
                                path: display.clone(),
                                row,
                                source,
                            }
                        })?;
                        records.push(record);
                    }
                    Err(e) => {
                        let row = e
                            .position()
                            .map(|p| p.line())
                            .unwrap_or(records.len() as u64 + 2);
                        return Err(IngestError::Schema {
                            path: display,
                            row,
                            message: e.to_string(),
                        });
                    }
                }
            }
            Ok(records)
        }
        AnnotationFormat::Jsonl => {
            let file = std::fs::File::open(path).map_err(io_err)?;
            let mut records = Vec::new();
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let row = idx as u64 + 1;
                let line = line.map_err(|source| IngestError::Io {
                    path: display.clone(),
                    source,
                })?;
                if line.trim().is_empty() {
                    continue;
                }
                let raw: RawRecord =
                    serde_json::from_str(&line).map_err(|e| IngestError::Schema {
                        path: display.clone(),
                        row,
                        message: e.to_string(),
                    })?;
                let record =
                    validate_record(&raw).map_err(|source| IngestError::BadRow {
                        path: display.clone(),
                        row,
                        source,
                    })?;
                records.push(record);
            }
            Ok(records)
        }
    }
}

/// Write annotations back out in either interchange format.
pub fn write_annotations(
    path: &Path,
    records: &[AnnotationRecord],
    format: AnnotationFormat,
) -> Result<(), IngestError> {
    let display = path.display().to_string();
    let io_err = |source| IngestError::Io {
        path: display.clone(),
        source,
    };
    match format {
        AnnotationFormat::Csv => {
            let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => io_err(source),
                other => IngestError::Schema {
                    path: display.clone(),
                    row: 0,
                    message: format!("{other:?}"),
                },
            })?;
            for rec in records {
                writer
                    .serialize(RawRecord::from(rec))
                    .map_err(|e| IngestError::Schema {
                        path: display.clone(),
                        row: 0,
                        message: e.to_string(),
                    })?;
            }
            writer.flush().map_err(io_err)?;
            Ok(())
        }
        AnnotationFormat::Jsonl => {
            let mut file = std::fs::File::create(path).map_err(io_err)?;
            for rec in records {
                let line = record_to_json_line(rec);
                writeln!(file, "{line}").map_err(|source| IngestError::Io {
                    path: display.clone(),
                    source,
                })?;
            }
            Ok(())
        }
    }
}

/// One record as a JSONL line with the label as a number.
pub fn record_to_json_line(rec: &AnnotationRecord) -> String {
    serde_json::json!({
        "claim_id": rec.claim_id,
        "topic": rec.topic,
        "veracity": rec.veracity.as_str(),
        "condition": rec.condition,
        "source": rec.source.wire_source(),
        "prompt_id": rec.source.wire_prompt_id(),
        "annotator_id": rec.annotator_id,
        "label": rec.label,
    })
    .to_string()
}

/// Expected verdict of a gold/attention-check claim.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldVerdict {
    ClearlyTrue,
    ClearlyFalse,
}

/// A gold claim and the verdict an attentive worker must land on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSpec {
    pub claim_id: String,
    pub expected_verdict: GoldVerdict,
}

/// Load gold specs from a CSV with header `claim_id,expected_verdict`.
pub fn load_gold_specs(path: &Path) -> Result<Vec<GoldSpec>, IngestError> {
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => IngestError::Io {
            path: display.clone(),
            source,
        },
        other => IngestError::Schema {
            path: display.clone(),
            row: 1,
            message: format!("{other:?}"),
        },
    })?;
    let mut specs = Vec::new();
    for (idx, result) in reader.deserialize::<GoldSpec>().enumerate() {
        specs.push(result.map_err(|e| IngestError::Schema {
            path: display.clone(),
            row: idx as u64 + 2,
            message: e.to_string(),
        })?);
    }
    Ok(specs)
}

/// Why a worker's records were dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// Fewer than `min_gold` gold answers.
    InsufficientGoldCoverage,
    /// Gold accuracy at or below the threshold.
    LowAccuracy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedWorker {
    pub annotator_id: String,
    pub reason: DropReason,
    pub gold_seen: usize,
    pub gold_correct: usize,
}

/// Output of [`filter_workers_by_gold_accuracy`].
#[derive(Clone, Debug)]
pub struct GoldFilterOutcome {
    /// Records of retained workers, duplicates removed, input order kept.
    pub kept: Vec<AnnotationRecord>,
    pub dropped_workers: Vec<DroppedWorker>,
    /// Records belonging to dropped workers (after duplicate removal).
    pub dropped_records: Vec<AnnotationRecord>,
    pub duplicates_removed: usize,
}

/// Keep only workers who answered at least `min_gold` gold questions with
/// accuracy strictly above `accuracy_threshold`.
///
/// A gold answer is correct when the perceived-falsehood label falls on the
/// matching half of the 1..6 scale: ≤ 3 for clearly-true claims, ≥ 4 for
/// clearly-false ones. Duplicate (worker, claim) responses beyond the first
/// (in input order) are removed before scoring.
pub fn filter_workers_by_gold_accuracy(
    records: &[AnnotationRecord],
    gold: &[GoldSpec],
    accuracy_threshold: f64,
    min_gold: usize,
) -> Result<GoldFilterOutcome, IngestError> {
    if !(0.0..=1.0).contains(&accuracy_threshold) {
        return Err(IngestError::BadThreshold(accuracy_threshold));
    }
    let gold_map: BTreeMap<&str, GoldVerdict> = gold
        .iter()
        .map(|g| (g.claim_id.as_str(), g.expected_verdict))
        .collect();

    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut deduped = Vec::with_capacity(records.len());
    let mut duplicates_removed = 0usize;
    for rec in records {
        if seen.insert((rec.annotator_id.clone(), rec.claim_id.clone())) {
            deduped.push(rec.clone());
        } else {
            duplicates_removed += 1;
        }
    }

    let mut tallies: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut any_gold = false;
    for rec in &deduped {
        if let Some(verdict) = gold_map.get(rec.claim_id.as_str()) {
            any_gold = true;
            let entry = tallies.entry(rec.annotator_id.as_str()).or_insert((0, 0));
            entry.0 += 1;
            let correct = match verdict {
                GoldVerdict::ClearlyTrue => rec.label <= 3,
                GoldVerdict::ClearlyFalse => rec.label >= 4,
            };
            if correct {
                entry.1 += 1;
            }
        }
    }
    if !any_gold {
        return Err(IngestError::NoGoldClaims);
    }

    let mut dropped_workers = Vec::new();
    let mut dropped_ids: BTreeSet<String> = BTreeSet::new();
    let workers: BTreeSet<&str> = deduped.iter().map(|r| r.annotator_id.as_str()).collect();
    for worker in workers {
        let (sen, correct) = tallies.get(worker).copied().unwrap_or((0, 0));
        let reason = if sen < min_gold {
            Some(DropReason::InsufficientGoldCoverage)
        } else if (correct as f64 / sen as f64) <= accuracy_threshold {
            Some(DropReason::LowAccuracy)
        } else {
            None
        };
        if let Some(reason) = reason {
            dropped_workers.push(DroppedWorker {
                annotator_id: worker.to_string(),
                reason,
                gold_seen: sen,
                gold_correct: correct,
            });
            dropped_ids.insert(worker.to_string());
        }
    }

    let (dropped_records, kept): (Vec<_>, Vec<_>) = deduped
        .into_iter()
        .partition(|r| dropped_ids.contains(&r.annotator_id));

    Ok(GoldFilterOutcome {
        kept,
        dropped_workers,
        dropped_records,
        duplicates_removed,
    })
}

/// Per (topic, condition) label statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummaryRow {
    pub topic: String,
    pub condition: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 with `single_sample` set when n = 1.
    pub std_dev: f64,
    pub single_sample: bool,
}

/// Per-topic claim counts by veracity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicVeracityRow {
    pub topic: String,
    pub true_claims: usize,
    pub false_claims: usize,
    pub unknown_claims: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub condition_rows: Vec<ConditionSummaryRow>,
    pub topic_rows: Vec<TopicVeracityRow>,
}

impl DatasetSummary {
    pub fn condition_row(&self, topic: &str, condition: &str) -> Option<&ConditionSummaryRow> {
        self.condition_rows
            .iter()
            .find(|r| r.topic == topic && r.condition == condition)
    }
}

/// Count, mean, and sample standard deviation per (topic, condition), plus
/// claim counts by veracity per topic.
pub fn summarize_dataset(records: &[AnnotationRecord]) -> Result<DatasetSummary, IngestError> {
    if records.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut by_cell: BTreeMap<(String, String), Vec<u8>> = BTreeMap::new();
    let mut claims_by_topic: BTreeMap<String, BTreeMap<String, crate::model::Veracity>> =
        BTreeMap::new();
    for rec in records {
        by_cell
            .entry((rec.topic.clone(), rec.condition.clone()))
            .or_default()
            .push(rec.label);
        claims_by_topic
            .entry(rec.topic.clone())
            .or_default()
            .insert(rec.claim_id.clone(), rec.veracity);
    }

    let condition_rows = by_cell
        .into_iter()
        .map(|((topic, condition), labels)| {
            let n = labels.len();
            let mean = labels.iter().map(|&l| f64::from(l)).sum::<f64>() / n as f64;
            let (std_dev, single) = if n == 1 {
                (0.0, true)
            } else {
                let ss: f64 = labels
                    .iter()
                    .map(|&l| (f64::from(l) - mean) * (f64::from(l) - mean))
                    .sum();
                ((ss / (n as f64 - 1.0)).sqrt(), false)
            };
            ConditionSummaryRow {
                topic,
                condition,
                n,
                mean,
                std_dev,
                single_sample: single,
            }
        })
        .collect();

    let topic_rows = claims_by_topic
        .into_iter()
        .map(|(topic, claims)| {
            let mut row = TopicVeracityRow {
                topic,
                true_claims: 0,
                false_claims: 0,
                unknown_claims: 0,
            };
            for veracity in claims.values() {
                match veracity {
                    crate::model::Veracity::True => row.true_claims += 1,
                    crate::model::Veracity::False => row.false_claims += 1,
                    crate::model::Veracity::Unknown => row.unknown_claims += 1,
                }
            }
            row
        })
        .collect();

    Ok(DatasetSummary {
        condition_rows,
        topic_rows,
    })
}

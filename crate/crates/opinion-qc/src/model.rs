//! Annotation data model shared by every other module.
//!
//! The atomic datum is an [`AnnotationRecord`]: one Likert label for a
//! `(claim, condition, source)` triple. Records are grouped per topic into a
//! [`TopicDataset`], the input to every statistical test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical name of the average/neutral condition.
pub const BASE_CONDITION: &str = "base";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("label {0} out of range {1}..={2}")]
    LabelOutOfRange(i64, u8, u8),
    #[error("label {0:?} is not an integer")]
    LabelNotInteger(String),
    #[error("field `{0}` must not be empty")]
    EmptyField(&'static str),
    #[error("malformed source {0:?}: expected \"human\" or \"model:<name>\"")]
    MalformedSource(String),
    #[error("malformed veracity {0:?}: expected true, false, or unknown")]
    MalformedVeracity(String),
    #[error("duplicate record for claim {claim_id:?}, condition {condition:?}, source {source_key:?}, annotator {annotator_id:?}")]
    DuplicateRecord {
        claim_id: String,
        condition: String,
        source_key: String,
        annotator_id: String,
    },
    #[error("empty topic dataset: no claims for topic {0:?} survive filtering")]
    EmptyTopicDataset(String),
    #[error("no conditions requested for topic dataset")]
    NoRequiredConditions,
    #[error("claim {claim_id:?} has no cell for condition {condition:?}")]
    MissingCell {
        claim_id: String,
        condition: String,
    },
    #[error("cell for claim {claim_id:?}, condition {condition:?} has no labels")]
    EmptyCell {
        claim_id: String,
        condition: String,
    },
}

/// Likert scale bounds. The instruments here use 1..=6; the bounds travel
/// with each dataset so other scales stay possible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertScale {
    pub min: u8,
    pub max: u8,
}

impl LikertScale {
    pub const fn six_point() -> Self {
        Self { min: 1, max: 6 }
    }

    pub fn contains(&self, label: u8) -> bool {
        (self.min..=self.max).contains(&label)
    }
}

impl Default for LikertScale {
    fn default() -> Self {
        Self::six_point()
    }
}

/// Claim-level ground-truth verdict carried alongside each annotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Veracity {
    True,
    False,
    Unknown,
}

impl Veracity {
    pub fn parse(raw: &str) -> Result<Self, ModelError> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "true" => Ok(Veracity::True),
            "false" => Ok(Veracity::False),
            "unknown" => Ok(Veracity::Unknown),
            _ => Err(ModelError::MalformedVeracity(raw.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Veracity::True => "true",
            Veracity::False => "false",
            Veracity::Unknown => "unknown",
        }
    }
}

/// Where a label came from: a human worker or a model run under a prompt.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    Human,
    Model { name: String, prompt_id: String },
}

impl Source {
    /// Parse the wire encoding: `human`, or `model:<name>` with the prompt
    /// id carried in its own column/field.
    pub fn parse(raw: &str, prompt_id: &str) -> Result<Self, ModelError> {
        let trimmed = raw.trim();
        if trimmed.eq_ignore_ascii_case("human") {
            return Ok(Source::Human);
        }
        if let Some(name) = trimmed.strip_prefix("model:") {
            if name.is_empty() {
                return Err(ModelError::MalformedSource(raw.to_string()));
            }
            return Ok(Source::Model {
                name: name.to_string(),
                prompt_id: prompt_id.trim().to_string(),
            });
        }
        Err(ModelError::MalformedSource(raw.to_string()))
    }

    /// Wire encoding of the source column (prompt id excluded).
    pub fn wire_source(&self) -> String {
        match self {
            Source::Human => "human".to_string(),
            Source::Model { name, .. } => format!("model:{name}"),
        }
    }

    pub fn wire_prompt_id(&self) -> &str {
        match self {
            Source::Human => "",
            Source::Model { prompt_id, .. } => prompt_id,
        }
    }

    pub fn is_human(&self) -> bool {
        matches!(self, Source::Human)
    }

    pub fn model_name(&self) -> Option<&str> {
        match self {
            Source::Human => None,
            Source::Model { name, .. } => Some(name),
        }
    }

    pub fn prompt_id(&self) -> Option<&str> {
        match self {
            Source::Human => None,
            Source::Model { prompt_id, .. } => Some(prompt_id),
        }
    }
}

/// One Likert label for a `(claim, condition, source)` triple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub claim_id: String,
    pub topic: String,
    pub veracity: Veracity,
    /// Group name (`"man"`, `"woman"`, …) or [`BASE_CONDITION`].
    pub condition: String,
    pub source: Source,
    /// Likert score on the dataset scale (1..=6 by default).
    pub label: u8,
    /// Worker id or sample index; opaque.
    pub annotator_id: String,
}

impl AnnotationRecord {
    /// Key under which records must be unique within a dataset.
    pub fn uniqueness_key(&self) -> (String, String, String, String) {
        (
            self.claim_id.clone(),
            self.condition.clone(),
            format!("{}#{}", self.source.wire_source(), self.source.wire_prompt_id()),
            self.annotator_id.clone(),
        )
    }
}

/// Unvalidated field map, exactly as read from a CSV row or JSONL object.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub claim_id: String,
    pub topic: String,
    pub veracity: String,
    pub condition: String,
    pub source: String,
    #[serde(default)]
    pub prompt_id: String,
    pub annotator_id: String,
    #[serde(deserialize_with = "de_label")]
    pub label: String,
}

/// Accept the label as either a JSON number or a string.
fn de_label<'de, D>(deserializer: D) -> Result<String, D::Error>
where
    D: serde::Deserializer<'de>,
{
    struct LabelVisitor;
    impl serde::de::Visitor<'_> for LabelVisitor {
        type Value = String;
        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("an integer or string Likert label")
        }
        fn visit_i64<E>(self, v: i64) -> Result<String, E> {
            Ok(v.to_string())
        }
        fn visit_u64<E>(self, v: u64) -> Result<String, E> {
            Ok(v.to_string())
        }
        fn visit_f64<E>(self, v: f64) -> Result<String, E> {
            Ok(v.to_string())
        }
        fn visit_str<E>(self, v: &str) -> Result<String, E> {
            Ok(v.to_string())
        }
    }
    deserializer.deserialize_any(LabelVisitor)
}

impl From<&AnnotationRecord> for RawRecord {
    fn from(rec: &AnnotationRecord) -> Self {
        RawRecord {
            claim_id: rec.claim_id.clone(),
            topic: rec.topic.clone(),
            veracity: rec.veracity.as_str().to_string(),
            condition: rec.condition.clone(),
            source: rec.source.wire_source(),
            prompt_id: rec.source.wire_prompt_id().to_string(),
            annotator_id: rec.annotator_id.clone(),
            label: rec.label.to_string(),
        }
    }
}

/// Validate a raw field map into an [`AnnotationRecord`] on the given scale.
pub fn validate_record_on_scale(
    raw: &RawRecord,
    scale: LikertScale,
) -> Result<AnnotationRecord, ModelError> {
    if raw.claim_id.trim().is_empty() {
        return Err(ModelError::EmptyField("claim_id"));
    }
    if raw.topic.trim().is_empty() {
        return Err(ModelError::EmptyField("topic"));
    }
    if raw.condition.trim().is_empty() {
        return Err(ModelError::EmptyField("condition"));
    }
    let veracity = Veracity::parse(&raw.veracity)?;
    let source = Source::parse(&raw.source, &raw.prompt_id)?;
    let label_text = raw.label.trim();
    // "5" and "5.0" are both accepted; anything fractional is not a label.
    let value: i64 = match label_text.parse::<i64>() {
        Ok(v) => v,
        Err(_) => match label_text.parse::<f64>() {
            Ok(f) if f.fract() == 0.0 && f.abs() < i64::MAX as f64 => f as i64,
            _ => return Err(ModelError::LabelNotInteger(raw.label.clone())),
        },
    };
    if value < i64::from(scale.min) || value > i64::from(scale.max) {
        return Err(ModelError::LabelOutOfRange(value, scale.min, scale.max));
    }
    Ok(AnnotationRecord {
        claim_id: raw.claim_id.trim().to_string(),
        topic: raw.topic.trim().to_string(),
        veracity,
        condition: raw.condition.trim().to_string(),
        source,
        label: value as u8,
        annotator_id: raw.annotator_id.trim().to_string(),
    })
}

/// Validate against the default 1..=6 scale.
pub fn validate_record(raw: &RawRecord) -> Result<AnnotationRecord, ModelError> {
    validate_record_on_scale(raw, LikertScale::six_point())
}

/// All labels observed for one `(claim, condition)` cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimCell {
    pub claim_id: String,
    pub condition: String,
    pub labels: Vec<u8>,
}

impl ClaimCell {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn mean(&self) -> f64 {
        let sum: u64 = self.labels.iter().map(|&l| u64::from(l)).sum();
        sum as f64 / self.labels.len() as f64
    }
}

/// Claims of one topic with per-condition label vectors.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicDataset {
    topic: String,
    /// claim_id → condition → cell; BTreeMaps keep iteration deterministic.
    claims: BTreeMap<String, BTreeMap<String, ClaimCell>>,
    /// Ordered non-base condition names G.
    groups: Vec<String>,
    scale: LikertScale,
}

impl TopicDataset {
    /// Assemble a dataset from prebuilt cells, checking the invariants:
    /// every claim carries a cell for every group (and for `base` whenever
    /// any claim has one), and no cell is empty.
    pub fn from_cells(
        topic: impl Into<String>,
        groups: Vec<String>,
        claims: BTreeMap<String, BTreeMap<String, ClaimCell>>,
        scale: LikertScale,
    ) -> Result<Self, ModelError> {
        let topic = topic.into();
        if claims.is_empty() {
            return Err(ModelError::EmptyTopicDataset(topic));
        }
        if groups.is_empty() {
            return Err(ModelError::NoRequiredConditions);
        }
        let any_base = claims
            .values()
            .any(|cells| cells.contains_key(BASE_CONDITION));
        for (claim_id, cells) in &claims {
            let mut required: Vec<&str> = groups.iter().map(String::as_str).collect();
            if any_base {
                required.push(BASE_CONDITION);
            }
            for cond in required {
                match cells.get(cond) {
                    None => {
                        return Err(ModelError::MissingCell {
                            claim_id: claim_id.clone(),
                            condition: cond.to_string(),
                        })
                    }
                    Some(cell) if cell.is_empty() => {
                        return Err(ModelError::EmptyCell {
                            claim_id: claim_id.clone(),
                            condition: cond.to_string(),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(Self {
            topic,
            claims,
            groups,
            scale,
        })
    }

    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn scale(&self) -> LikertScale {
        self.scale
    }

    /// Number of claims N_ω.
    pub fn n_claims(&self) -> usize {
        self.claims.len()
    }

    /// Claims in deterministic (sorted) order.
    pub fn claim_ids(&self) -> impl Iterator<Item = &str> {
        self.claims.keys().map(String::as_str)
    }

    pub fn cells(&self, claim_id: &str) -> Option<&BTreeMap<String, ClaimCell>> {
        self.claims.get(claim_id)
    }

    pub fn cell(&self, claim_id: &str, condition: &str) -> Result<&ClaimCell, ModelError> {
        self.claims
            .get(claim_id)
            .and_then(|cells| cells.get(condition))
            .ok_or_else(|| ModelError::MissingCell {
                claim_id: claim_id.to_string(),
                condition: condition.to_string(),
            })
    }

    pub fn has_base(&self) -> bool {
        self.claims
            .values()
            .next()
            .is_some_and(|cells| cells.contains_key(BASE_CONDITION))
    }
}

/// Group records into a [`TopicDataset`].
///
/// Claims missing any required condition, or with any required cell holding
/// fewer than `min_labels` labels, are excluded and reported as warnings.
/// Cells are restricted to the required conditions; `groups` become the
/// required conditions minus `base`, in request order.
pub fn build_topic_dataset(
    records: &[AnnotationRecord],
    topic: &str,
    required_conditions: &[&str],
    min_labels: usize,
) -> Result<(TopicDataset, Vec<String>), ModelError> {
    if required_conditions.is_empty() {
        return Err(ModelError::NoRequiredConditions);
    }
    let groups: Vec<String> = required_conditions
        .iter()
        .filter(|c| **c != BASE_CONDITION)
        .map(|c| c.to_string())
        .collect();
    if groups.is_empty() {
        return Err(ModelError::NoRequiredConditions);
    }

    // (claim, condition) → sortable (source key, annotator, label) triples.
    let mut grouped: BTreeMap<String, BTreeMap<String, Vec<(String, String, u8)>>> =
        BTreeMap::new();
    let mut seen: std::collections::HashSet<(String, String, String, String)> =
        std::collections::HashSet::new();
    for rec in records.iter().filter(|r| r.topic == topic) {
        if !required_conditions.contains(&rec.condition.as_str()) {
            continue;
        }
        if !seen.insert(rec.uniqueness_key()) {
            return Err(ModelError::DuplicateRecord {
                claim_id: rec.claim_id.clone(),
                condition: rec.condition.clone(),
                source_key: rec.source.wire_source(),
                annotator_id: rec.annotator_id.clone(),
            });
        }
        grouped
            .entry(rec.claim_id.clone())
            .or_default()
            .entry(rec.condition.clone())
            .or_default()
            .push((
                format!("{}#{}", rec.source.wire_source(), rec.source.wire_prompt_id()),
                rec.annotator_id.clone(),
                rec.label,
            ));
    }

    let mut warnings = Vec::new();
    let mut claims: BTreeMap<String, BTreeMap<String, ClaimCell>> = BTreeMap::new();
    'claims: for (claim_id, mut by_condition) in grouped {
        for cond in required_conditions {
            let n = by_condition.get(*cond).map_or(0, Vec::len);
            if n == 0 {
                warnings.push(format!(
                    "claim {claim_id:?} excluded: missing condition {cond:?}"
                ));
                continue 'claims;
            }
            if n < min_labels {
                warnings.push(format!(
                    "claim {claim_id:?} excluded: condition {cond:?} has {n} label(s), fewer than {min_labels}"
                ));
                continue 'claims;
            }
        }
        let mut cells = BTreeMap::new();
        for cond in required_conditions {
            let mut triples = by_condition.remove(*cond).unwrap_or_default();
            // Sort so permuting the input records cannot change the cell.
            triples.sort();
            cells.insert(
                cond.to_string(),
                ClaimCell {
                    claim_id: claim_id.clone(),
                    condition: cond.to_string(),
                    labels: triples.into_iter().map(|(_, _, l)| l).collect(),
                },
            );
        }
        claims.insert(claim_id, cells);
    }

    if claims.is_empty() {
        return Err(ModelError::EmptyTopicDataset(topic.to_string()));
    }
    let dataset = TopicDataset::from_cells(topic, groups, claims, LikertScale::six_point())?;
    Ok((dataset, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(
        claim: &str,
        topic: &str,
        condition: &str,
        label: u8,
        annotator: &str,
    ) -> AnnotationRecord {
        AnnotationRecord {
            claim_id: claim.to_string(),
            topic: topic.to_string(),
            veracity: Veracity::Unknown,
            condition: condition.to_string(),
            source: Source::Human,
            label,
            annotator_id: annotator.to_string(),
        }
    }

    fn raw(label: &str) -> RawRecord {
        RawRecord {
            claim_id: "c1".into(),
            topic: "Abortion".into(),
            veracity: "unknown".into(),
            condition: "woman".into(),
            source: "human".into(),
            prompt_id: String::new(),
            annotator_id: "w3".into(),
            label: label.into(),
        }
    }

    #[test]
    fn validates_well_formed_record() {
        let rec = validate_record(&raw("5")).unwrap();
        assert_eq!(rec.label, 5);
        assert_eq!(rec.condition, "woman");
        assert!(rec.source.is_human());
    }

    #[test]
    fn rejects_out_of_range_labels() {
        assert!(matches!(
            validate_record(&raw("7")),
            Err(ModelError::LabelOutOfRange(7, 1, 6))
        ));
        assert!(matches!(
            validate_record(&raw("0")),
            Err(ModelError::LabelOutOfRange(0, 1, 6))
        ));
        assert!(matches!(
            validate_record(&raw("banana")),
            Err(ModelError::LabelNotInteger(_))
        ));
        assert!(matches!(
            validate_record(&raw("4.5")),
            Err(ModelError::LabelNotInteger(_))
        ));
        assert_eq!(validate_record(&raw("4.0")).unwrap().label, 4);
    }

    #[test]
    fn rejects_empty_and_malformed_fields() {
        let mut r = raw("3");
        r.claim_id = " ".into();
        assert!(matches!(
            validate_record(&r),
            Err(ModelError::EmptyField("claim_id"))
        ));
        let mut r = raw("3");
        r.condition = String::new();
        assert!(matches!(
            validate_record(&r),
            Err(ModelError::EmptyField("condition"))
        ));
        let mut r = raw("3");
        r.source = "model:".into();
        assert!(matches!(
            validate_record(&r),
            Err(ModelError::MalformedSource(_))
        ));
        let mut r = raw("3");
        r.source = "oracle".into();
        assert!(matches!(
            validate_record(&r),
            Err(ModelError::MalformedSource(_))
        ));
        let mut r = raw("3");
        r.veracity = "maybe".into();
        assert!(matches!(
            validate_record(&r),
            Err(ModelError::MalformedVeracity(_))
        ));
    }

    #[test]
    fn model_source_carries_prompt() {
        let mut r = raw("2");
        r.source = "model:gpt-x".into();
        r.prompt_id = "cond1".into();
        let rec = validate_record(&r).unwrap();
        assert_eq!(rec.source.model_name(), Some("gpt-x"));
        assert_eq!(rec.source.prompt_id(), Some("cond1"));
        assert_eq!(rec.source.wire_source(), "model:gpt-x");
    }

    fn three_claim_records() -> Vec<AnnotationRecord> {
        let mut recs = Vec::new();
        for claim in ["c1", "c2", "c3"] {
            for cond in ["man", "woman", "base"] {
                for (i, label) in [2u8, 4].iter().enumerate() {
                    recs.push(record(claim, "T", cond, *label, &format!("a{i}")));
                }
            }
        }
        recs
    }

    #[test]
    fn builds_complete_dataset() {
        let recs = three_claim_records();
        let (data, warnings) =
            build_topic_dataset(&recs, "T", &["man", "woman", "base"], 2).unwrap();
        assert_eq!(data.n_claims(), 3);
        assert!(warnings.is_empty());
        assert_eq!(data.groups(), &["man".to_string(), "woman".to_string()]);
        assert!(data.has_base());
        assert_eq!(data.cell("c1", "man").unwrap().labels, vec![2, 4]);
    }

    #[test]
    fn excludes_claims_missing_base() {
        let mut recs = three_claim_records();
        recs.retain(|r| !(r.claim_id == "c2" && r.condition == "base"));
        let (data, warnings) =
            build_topic_dataset(&recs, "T", &["man", "woman", "base"], 2).unwrap();
        assert_eq!(data.n_claims(), 2);
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("c2"));
    }

    #[test]
    fn errors_when_everything_is_filtered() {
        let recs = three_claim_records();
        let err = build_topic_dataset(&recs, "T", &["man", "woman", "base"], 5).unwrap_err();
        assert!(matches!(err, ModelError::EmptyTopicDataset(_)));
    }

    #[test]
    fn duplicate_full_key_is_an_error() {
        let mut recs = three_claim_records();
        recs.push(record("c1", "T", "man", 3, "a0"));
        let err = build_topic_dataset(&recs, "T", &["man", "woman", "base"], 2).unwrap_err();
        assert!(matches!(err, ModelError::DuplicateRecord { .. }));
    }

    #[test]
    fn order_independent_construction() {
        let recs = three_claim_records();
        let mut reversed = recs.clone();
        reversed.reverse();
        let (a, _) = build_topic_dataset(&recs, "T", &["man", "woman", "base"], 2).unwrap();
        let (b, _) = build_topic_dataset(&reversed, "T", &["man", "woman", "base"], 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cell_mean_in_scale() {
        let cell = ClaimCell {
            claim_id: "c".into(),
            condition: "man".into(),
            labels: vec![1, 6, 3],
        };
        let m = cell.mean();
        assert!((1.0..=6.0).contains(&m));
        assert!((m - 10.0 / 3.0).abs() < 1e-15);
    }
}

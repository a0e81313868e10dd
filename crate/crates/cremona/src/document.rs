//! The CLI's JSON input and output formats: strict curve documents in,
//! canonical report documents out. Reports never contain floats; rationals
//! are "p/q" strings; keys are emitted sorted, so identical inputs produce
//! byte-identical reports.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cluster::{ClusterPoint, PlanePair, PointId, ValidationReport, WeightedCluster};
use crate::error::{EngineError, Result};
use crate::hirzebruch::{replay, Pair, RuledPair, SurfaceDesc, TraceStep};

/// The versioned JSON schema the input format is pinned to.
pub const CURVE_DOCUMENT_SCHEMA: &str = include_str!("../schema/curve-document.v1.json");

/// Strict schema for the `surface` field: "plane" or {"hirzebruch": a}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceSpec {
    Name(String),
    Hirzebruch(HirzebruchTag),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HirzebruchTag {
    pub hirzebruch: i64,
}

/// Strict schema for the `class` field: {"degree": d} or {"alpha": a, "beta": b}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassSpec {
    Degree(DegreeClass),
    Ruled(RuledClass),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeClass {
    pub degree: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuledClass {
    pub alpha: i64,
    pub beta: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub id: String,
    pub mult: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proximate_to: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub on_c0: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_class_degree: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch_bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_break: Option<Vec<String>>,
}

/// A curve document: surface, class, weighted cluster, options.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDocument {
    pub surface: SurfaceSpec,
    pub class: ClassSpec,
    #[serde(default)]
    pub points: Vec<PointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionsSpec>,
}

/// Why a document failed to produce a pair.
#[derive(Debug)]
pub enum DocumentError {
    /// Malformed JSON or a schema violation, with its location.
    Schema { path: String, message: String },
    /// Structurally well-formed but invariant-violating input.
    Invalid(ValidationReport),
}

impl std::fmt::Display for DocumentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DocumentError::Schema { path, message } => {
                write!(f, "schema error at path /{path}: {message}")
            }
            DocumentError::Invalid(report) => write!(f, "invalid input: {report}"),
        }
    }
}

impl std::error::Error for DocumentError {}

/// Parse a strict curve document (or an array of them) from JSON bytes.
pub fn parse_document(bytes: &[u8]) -> std::result::Result<CurveDocument, DocumentError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    match serde_path_to_error::deserialize::<_, CurveDocument>(de) {
        Ok(doc) => Ok(normalize(doc)),
        Err(err) => Err(DocumentError::Schema {
            path: err.path().to_string(),
            message: err.inner().to_string(),
        }),
    }
}

/// Parse a batch: a single document or an array of documents.
pub fn parse_batch(bytes: &[u8]) -> std::result::Result<Vec<CurveDocument>, DocumentError> {
    let value: Value = serde_json::from_slice(bytes).map_err(|e| DocumentError::Schema {
        path: String::new(),
        message: e.to_string(),
    })?;
    match value {
        Value::Array(items) => items
            .into_iter()
            .enumerate()
            .map(|(i, item)| {
                let bytes = serde_json::to_vec(&item).expect("reserializing parsed JSON");
                parse_document(&bytes).map_err(|e| match e {
                    DocumentError::Schema { path, message } => DocumentError::Schema {
                        path: format!("{i}/{path}"),
                        message,
                    },
                    other => other,
                })
            })
            .collect(),
        other => {
            let bytes = serde_json::to_vec(&other).expect("reserializing parsed JSON");
            Ok(vec![parse_document(&bytes)?])
        }
    }
}

/// Trim ids; normalization keeps the schema strict and the engine's
/// identifier handling uniform.
fn normalize(mut doc: CurveDocument) -> CurveDocument {
    for p in &mut doc.points {
        p.id = p.id.trim().to_string();
        if let Some(parent) = &mut p.parent {
            *parent = parent.trim().to_string();
        }
        if let Some(prox) = &mut p.proximate_to {
            for q in prox.iter_mut() {
                *q = q.trim().to_string();
            }
        }
    }
    doc
}

impl CurveDocument {
    /// Convert to an engine pair, or report every violated invariant.
    pub fn to_pair(&self) -> std::result::Result<Pair, DocumentError> {
        let cluster = self.to_cluster();
        match (&self.surface, &self.class) {
            (SurfaceSpec::Name(name), ClassSpec::Degree(DegreeClass { degree })) => {
                if name != "plane" {
                    return Err(DocumentError::Schema {
                        path: "surface".into(),
                        message: format!("unknown surface {name:?}, expected \"plane\""),
                    });
                }
                PlanePair::new(*degree, cluster)
                    .map(Pair::Plane)
                    .map_err(DocumentError::Invalid)
            }
            (SurfaceSpec::Hirzebruch(tag), ClassSpec::Ruled(RuledClass { alpha, beta })) => {
                RuledPair::new(tag.hirzebruch, *alpha, *beta, cluster)
                    .map(Pair::Ruled)
                    .map_err(DocumentError::Invalid)
            }
            (SurfaceSpec::Name(_), ClassSpec::Ruled(_)) => Err(DocumentError::Schema {
                path: "class".into(),
                message: "plane surface takes {\"degree\": d}".into(),
            }),
            (SurfaceSpec::Hirzebruch(_), ClassSpec::Degree(_)) => Err(DocumentError::Schema {
                path: "class".into(),
                message: "Hirzebruch surface takes {\"alpha\": a, \"beta\": b}".into(),
            }),
        }
    }

    fn to_cluster(&self) -> WeightedCluster {
        let points = self
            .points
            .iter()
            .map(|p| {
                let parent = p.parent.as_ref().map(|s| PointId::new(s.clone()));
                let proximate_to: BTreeSet<PointId> = match &p.proximate_to {
                    Some(list) => list.iter().map(|s| PointId::new(s.clone())).collect(),
                    None => parent.iter().cloned().collect(),
                };
                ClusterPoint {
                    id: PointId::new(p.id.clone()),
                    mult: p.mult,
                    parent,
                    proximate_to,
                    on_c0: p.on_c0,
                }
            })
            .collect();
        WeightedCluster::new(points)
    }

    pub fn branch_bound(&self) -> usize {
        self.options
            .as_ref()
            .and_then(|o| o.branch_bound)
            .unwrap_or(64)
    }

    pub fn max_class_degree(&self) -> i64 {
        self.options
            .as_ref()
            .and_then(|o| o.max_class_degree)
            .unwrap_or(6)
    }

    pub fn tie_break(&self) -> crate::hirzebruch::TieBreak {
        crate::hirzebruch::TieBreak {
            prefer: self
                .options
                .as_ref()
                .and_then(|o| o.tie_break.clone())
                .unwrap_or_default()
                .into_iter()
                .map(PointId::new)
                .collect(),
        }
    }

    /// Round-trip a pair back into document form.
    pub fn from_pair(pair: &Pair) -> CurveDocument {
        let (surface, class, cluster) = match pair {
            Pair::Plane(p) => (
                SurfaceSpec::Name("plane".into()),
                ClassSpec::Degree(DegreeClass { degree: p.degree() }),
                p.cluster(),
            ),
            Pair::Ruled(r) => (
                SurfaceSpec::Hirzebruch(HirzebruchTag { hirzebruch: r.a() }),
                ClassSpec::Ruled(RuledClass {
                    alpha: r.alpha(),
                    beta: r.beta(),
                }),
                r.cluster(),
            ),
        };
        CurveDocument {
            surface,
            class,
            points: cluster
                .points()
                .iter()
                .map(|p| PointSpec {
                    id: p.id.to_string(),
                    mult: p.mult,
                    parent: p.parent.as_ref().map(|q| q.to_string()),
                    proximate_to: if p.proximate_to.is_empty() {
                        None
                    } else {
                        Some(p.proximate_to.iter().map(|q| q.to_string()).collect())
                    },
                    on_c0: p.on_c0,
                })
                .collect(),
            options: None,
        }
    }
}

/// A replayable trace attached to a report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRecord {
    pub label: String,
    pub initial: CurveDocument,
    pub steps: Vec<TraceStep>,
}

/// Output format of the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

/// A report document under construction: command echo, verdict payload,
/// replayable traces, certificates.
#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument {
    pub command: String,
    pub engine_version: String,
    /// The engine is deterministic; the seed is fixed and echoed for
    /// reproducibility bookkeeping.
    pub determinism_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<CurveDocument>,
    pub verdicts: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<TraceRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Value>,
    /// One-line human summary, also used by the text format.
    pub summary: String,
}

impl ReportDocument {
    pub fn new(command: &str) -> Self {
        ReportDocument {
            command: command.to_string(),
            engine_version: crate::ENGINE_VERSION.to_string(),
            determinism_seed: 0,
            input: None,
            verdicts: Value::Null,
            traces: Vec::new(),
            certificates: Vec::new(),
            summary: String::new(),
        }
    }

    pub fn with_input(mut self, doc: &CurveDocument) -> Self {
        self.input = Some(doc.clone());
        self
    }

    pub fn with_verdicts(mut self, verdicts: Value) -> Self {
        self.verdicts = verdicts;
        self
    }

    pub fn with_summary(mut self, summary: impl Into<String>) -> Self {
        self.summary = summary.into();
        self
    }

    pub fn push_certificate(&mut self, certificate: Value) {
        self.certificates.push(certificate);
    }

    pub fn push_trace(&mut self, label: &str, initial: &Pair, steps: &[TraceStep]) {
        self.traces.push(TraceRecord {
            label: label.to_string(),
            initial: CurveDocument::from_pair(initial),
            steps: steps.to_vec(),
        });
    }

    /// Re-run every attached trace before emission; a mismatch is a hard
    /// failure carrying the index of the diverging step.
    pub fn verify_traces(&self) -> Result<()> {
        for record in &self.traces {
            let pair = record.initial.to_pair().map_err(|e| {
                EngineError::Internal(format!(
                    "trace {}: initial state invalid: {e}",
                    record.label
                ))
            })?;
            replay(&pair, &record.steps).map_err(|e| match e {
                EngineError::InvariantViolation { steps, message } => {
                    EngineError::InvariantViolation {
                        steps,
                        message: format!("trace {} diverged: {message}", record.label),
                    }
                }
                other => other,
            })?;
        }
        Ok(())
    }

    /// Canonical bytes: sorted keys, "p/q" rationals, no floats.
    pub fn emit(&self, format: ReportFormat) -> Result<String> {
        self.verify_traces()?;
        match format {
            ReportFormat::Json => {
                let value =
                    serde_json::to_value(self).map_err(|e| EngineError::Internal(e.to_string()))?;
                serde_json::to_string_pretty(&value)
                    .map_err(|e| EngineError::Internal(e.to_string()))
            }
            ReportFormat::Text => Ok(self.text()),
        }
    }

    fn text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command   {}\n", self.command));
        out.push_str(&format!("engine    {}\n", self.engine_version));
        out.push_str(&format!("summary   {}\n", self.summary));
        if let Value::Object(map) = &self.verdicts {
            for (key, value) in map {
                out.push_str(&format!("{:<9} {}\n", key, compact(value)));
            }
        } else if !self.verdicts.is_null() {
            out.push_str(&format!("verdict   {}\n", compact(&self.verdicts)));
        }
        for c in &self.certificates {
            out.push_str(&format!("cert      {}\n", compact(c)));
        }
        for t in &self.traces {
            out.push_str(&format!(
                "trace     {} ({} moves)\n",
                t.label,
                t.steps.len()
            ));
        }
        out
    }
}

fn compact(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => serde_json::to_string(other).unwrap_or_else(|_| "<unprintable>".into()),
    }
}

/// Render a surface description for summaries.
pub fn surface_text(desc: &SurfaceDesc) -> String {
    match desc {
        SurfaceDesc::Plane { degree } => format!("P2 degree {degree}"),
        SurfaceDesc::Ruled { a, alpha, beta } => format!("F{a} {alpha}C0+{beta}f"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEXTIC: &str = r#"{"surface":"plane","class":{"degree":6},
        "points":[{"id":"n","mult":2},{"id":"t1","mult":2},
                  {"id":"t2","mult":2,"parent":"t1"}]}"#;

    const D1: &str = r#"{"surface":{"hirzebruch":3},"class":{"alpha":3,"beta":11},
        "points":[{"id":"n","mult":2,"on_c0":true}]}"#;

    #[test]
    fn shipped_schema_is_valid_json() {
        let schema: serde_json::Value = serde_json::from_str(CURVE_DOCUMENT_SCHEMA).unwrap();
        assert_eq!(schema["title"], "CurveDocument");
    }

    #[test]
    fn parse_plane_document() {
        let doc = parse_document(SEXTIC.as_bytes()).unwrap();
        let pair = doc.to_pair().unwrap();
        match pair {
            Pair::Plane(p) => {
                assert_eq!(p.degree(), 6);
                assert_eq!(p.cluster().len(), 3);
            }
            _ => panic!("expected plane pair"),
        }
    }

    #[test]
    fn parse_ruled_document() {
        let doc = parse_document(D1.as_bytes()).unwrap();
        match doc.to_pair().unwrap() {
            Pair::Ruled(r) => {
                assert_eq!((r.a(), r.alpha(), r.beta()), (3, 3, 11));
                assert!(r.cluster().points()[0].is_on_c0());
            }
            _ => panic!("expected ruled pair"),
        }
    }

    #[test]
    fn missing_class_is_a_schema_error_with_location() {
        let err = parse_document(br#"{"surface":"plane"}"#).unwrap_err();
        match err {
            DocumentError::Schema { message, .. } => {
                assert!(message.contains("class"), "{message}");
            }
            _ => panic!("expected schema error"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err =
            parse_document(br#"{"surface":"plane","class":{"degree":3},"points":[],"extra":1}"#)
                .unwrap_err();
        assert!(matches!(err, DocumentError::Schema { .. }));

        let err = parse_document(
            br#"{"surface":"plane","class":{"degree":3},
                 "points":[{"id":"n","mult":2,"colour":"red"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, DocumentError::Schema { .. }));
    }

    #[test]
    fn invariant_violations_are_reported_not_schema_errors() {
        let err = parse_document(
            br#"{"surface":"plane","class":{"degree":3},
                 "points":[{"id":"a","mult":2},{"id":"b","mult":2}]}"#,
        )
        .unwrap()
        .to_pair()
        .unwrap_err();
        assert!(matches!(err, DocumentError::Invalid(_)));
    }

    #[test]
    fn ids_are_normalized() {
        let doc = parse_document(
            br#"{"surface":"plane","class":{"degree":3},
                 "points":[{"id":"  n  ","mult":2}]}"#,
        )
        .unwrap();
        assert_eq!(doc.points[0].id, "n");
    }

    #[test]
    fn document_round_trip_is_identity() {
        let doc = parse_document(SEXTIC.as_bytes()).unwrap();
        let emitted = serde_json::to_vec(&doc).unwrap();
        let again = parse_document(&emitted).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn batch_accepts_single_and_array() {
        let single = parse_batch(SEXTIC.as_bytes()).unwrap();
        assert_eq!(single.len(), 1);
        let array = format!("[{SEXTIC},{D1}]");
        let batch = parse_batch(array.as_bytes()).unwrap();
        assert_eq!(batch.len(), 2);
    }

    #[test]
    fn reports_are_byte_identical_and_sorted() {
        let doc = parse_document(SEXTIC.as_bytes()).unwrap();
        let report = ReportDocument::new("genus")
            .with_input(&doc)
            .with_verdicts(serde_json::json!({"genus": "7/1"}))
            .with_summary("genus 7/1");
        let a = report.emit(ReportFormat::Json).unwrap();
        let b = report.emit(ReportFormat::Json).unwrap();
        assert_eq!(a, b);
        // keys sorted: "class" precedes "points" precedes "surface" inside input
        let class_pos = a.find("\"class\"").unwrap();
        let surface_pos = a.find("\"surface\"").unwrap();
        assert!(class_pos < surface_pos);
        assert!(!a.contains("NaN"));
    }

    #[test]
    fn trace_verification_runs_on_emit() {
        let doc = parse_document(SEXTIC.as_bytes()).unwrap();
        let pair = doc.to_pair().unwrap();
        let model =
            crate::hirzebruch::standard_model(&pair, &crate::hirzebruch::TieBreak::default())
                .unwrap();
        let mut report = ReportDocument::new("standard-model").with_input(&doc);
        report.push_trace("model", &pair, &model.trace);
        assert!(report.emit(ReportFormat::Json).is_ok());

        // Corrupt the recorded final state: emission must fail.
        let mut bad = report.clone();
        if let Some(step) = bad.traces[0].steps.last_mut() {
            step.surface_after = SurfaceDesc::Plane { degree: 99 };
        }
        assert!(bad.emit(ReportFormat::Json).is_err());
    }
}

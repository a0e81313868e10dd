//! Symbolic engine for Cremona-equivalence questions about plane curves.
//!
//! A curve is given combinatorially: a degree (or a class on a Hirzebruch
//! surface) together with a weighted cluster of infinitely near singular
//! points. On that data the engine computes log discrepancies and the
//! terminal/canonical classification, runs the standard-model reduction
//! through elementary transformations of ruled surfaces, decides minimal
//! degree with replayable witness traces, decides Cremona equivalence to a
//! line for rational curves, and produces Noether-Fano inequivalence
//! certificates. Every birational move is verifiable against an independent
//! intersection-lattice oracle ([`lattice`]).
//!
//! All arithmetic is exact: integers in the lattice, arbitrary-precision
//! rationals everywhere else. No floating point.

pub mod cluster;
pub mod coolidge;
pub mod document;
pub mod error;
pub mod hirzebruch;
pub mod lattice;
pub mod minimality;
pub mod threefold;

pub use cluster::{
    classify_singularities, jung_test, log_discrepancies, noether_fano_certificate,
    noether_fano_plane_certificate, validate_cluster, Certificate, CertificateKind, Classification,
    ClassificationScope, ClusterContext, ClusterPoint, DiscrepancyReport, DiscrepancyWitness,
    PlanePair, PointId, SingularityClass, ValidationReport, WeightedCluster,
};
pub use coolidge::{
    find_contractible, half_mmp, km_empty_test, line_equivalent, replay_mmp, resolve_to_lattice,
    BlowupModel, CandidateClass, CandidateKind, CoolidgeConfig, KmOutcome, KmReport,
    LineCertificate, LineStatus, LineVerdict, MmpEndState, MmpRun,
};
pub use document::{
    parse_batch, parse_document, ClassSpec, CurveDocument, DocumentError, OptionsSpec, PointSpec,
    ReportDocument, ReportFormat, SurfaceSpec, TraceRecord,
};
pub use error::{EngineError, Result};
pub use hirzebruch::{
    adjoint, blow_down_to_plane, blow_up_max_point, elm, enumerate_standard_models,
    enumerate_standard_models_ruled, kodaira_dimension, replay, ruling_swap, standard_model,
    AdjointData, CenterDesc, Direction, ElmCenter, EnumeratedModels, MaxPointChoice, ModelKind,
    MoveOp, NewPointDesc, Pair, RuledPair, StandardModel, SurfaceDesc, TieBreak, TraceStep,
};
pub use lattice::{elm_oracle, BlowupSurface, DivisorClass, ElmOracleResult};
pub use minimality::{
    is_minimal_degree, minimal_degree_of, minimal_plane_model, minimal_plane_report,
    optimal_center_sequence, planar_system_degree, resolve_along_c0, Center, CenterSequence,
    MinimalPlaneModel, MinimalityStatus, MinimalityVerdict, ResolvedRuledPair, VerdictReason,
};
pub use threefold::{
    ci_projection_certificate, scroll_reduction, ProjectionPair, ScrollReduction, ScrollState,
};

use num_rational::BigRational;
use serde::ser::SerializeSeq;
use serde::Serializer;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Serialize an exact rational as the canonical "p/q" string.
pub(crate) fn ser_rational<S: Serializer>(
    r: &BigRational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&cluster::rational_string(r))
}

pub(crate) fn ser_opt_rational<S: Serializer>(
    r: &Option<BigRational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&cluster::rational_string(r)),
        None => s.serialize_none(),
    }
}

pub(crate) fn ser_entry_list<S: Serializer>(
    entries: &[(cluster::PointId, BigRational)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(entries.len()))?;
    for (id, r) in entries {
        seq.serialize_element(&(id, cluster::rational_string(r)))?;
    }
    seq.end()
}

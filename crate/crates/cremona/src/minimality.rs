//! Minimal-degree decision procedure: resolve ruled models along C0, pick
//! center sequences of maximal total multiplicity, compute minimal plane
//! model degrees, and assemble minimality verdicts with replayable witness
//! traces.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::cluster::{Certificate, PlanePair, PointId, WeightedCluster};
use crate::error::{EngineError, Result};
use crate::hirzebruch::{
    adjoint, blow_down_to_plane, elm, enumerate_standard_models, ElmCenter, ModelKind, Pair,
    RuledPair, StandardModel, TraceStep,
};

/// A ruled state with no singular point left on C0, reached by elementary
/// transformations from a nef-adjoint model.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedRuledPair {
    pub base: RuledPair,
    /// Multiplicities consumed while resolving along C0, in elm order.
    pub consumed: Vec<i64>,
    pub moves: Vec<TraceStep>,
}

/// Resolve the singularities of the curve along C0: repeatedly transform at
/// on-C0 points of multiplicity at least 2 until none remain. Requires a
/// nef adjoint at coefficient 2/alpha.
pub fn resolve_along_c0(pair: &RuledPair) -> Result<ResolvedRuledPair> {
    let c = BigRational::new(BigInt::from(2), BigInt::from(pair.alpha()));
    if !adjoint(pair, &c).nef {
        return Err(EngineError::Precondition(
            "resolve_along_c0 needs a nef adjoint (standard-model state)".into(),
        ));
    }
    let mut state = pair.clone();
    let mut consumed = Vec::new();
    let mut moves = Vec::new();
    let bound = state
        .cluster()
        .points()
        .iter()
        .filter(|p| p.is_on_c0() && p.mult >= 2)
        .count();
    for _ in 0..=bound {
        let next_center = state
            .cluster()
            .points()
            .iter()
            .find(|p| p.is_on_c0() && p.mult >= 2)
            .map(|p| (p.id.clone(), p.mult));
        match next_center {
            Some((id, mult)) => {
                let (next, step) = elm(&state, &ElmCenter::Point(id))?;
                consumed.push(mult);
                moves.push(step);
                state = next;
            }
            None => {
                return Ok(ResolvedRuledPair {
                    base: state,
                    consumed,
                    moves,
                });
            }
        }
    }
    Err(EngineError::InvariantViolation {
        steps: moves.len(),
        message: "resolution along C0 failed to terminate within the cluster weight".into(),
    })
}

/// A center of the blow-down chain with its recorded multiplicity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "center")]
pub enum Center {
    Point {
        id: PointId,
        mu: i64,
    },
    /// A generic smooth curve point off C0 (always available: only finitely
    /// many fibers meet the curve inside C0).
    Generic {
        mu: i64,
    },
}

impl Center {
    pub fn mu(&self) -> i64 {
        match self {
            Center::Point { mu, .. } => *mu,
            Center::Generic { mu } => *mu,
        }
    }
}

/// An ordered choice of b-1 off-C0 centers maximizing the total consumed
/// multiplicity.
#[derive(Clone, Debug, Serialize)]
pub struct CenterSequence {
    pub centers: Vec<Center>,
    pub total: i64,
}

/// Index-based view of the off-C0 forest of a cluster: points reachable from
/// level-0 roots that are not flagged on C0.
fn off_c0_forest(cluster: &WeightedCluster) -> Vec<(usize, Option<usize>)> {
    // (cluster index, parent position within the returned list)
    let mut members: Vec<usize> = Vec::new();
    let mut position: Vec<Option<usize>> = vec![None; cluster.len()];
    for (i, p) in cluster.points().iter().enumerate() {
        let include = match &p.parent {
            None => !p.is_on_c0(),
            Some(parent) => cluster
                .index_of(parent)
                .map(|pi| position[pi].is_some())
                .unwrap_or(false),
        };
        if include {
            position[i] = Some(members.len());
            members.push(i);
        }
    }
    members
        .iter()
        .map(|&i| {
            let parent_pos = cluster.points()[i]
                .parent
                .as_ref()
                .and_then(|pid| cluster.index_of(pid))
                .and_then(|pi| position[pi]);
            (i, parent_pos)
        })
        .collect()
}

/// Maximize the consumed multiplicity over order ideals of size at most
/// `slots` in the off-C0 forest; unfilled slots take generic smooth points of
/// multiplicity 1. Deterministic tie-break: the lexicographically smallest
/// selection in input order.
pub fn optimal_center_sequence(r: &ResolvedRuledPair) -> Result<CenterSequence> {
    let b = r.base.a();
    if b < 1 {
        return Err(EngineError::Precondition(
            "center sequences need b >= 1; F_0 states take the forced-up route".into(),
        ));
    }
    let slots = (b - 1) as usize;
    let cluster = r.base.cluster();
    let forest = off_c0_forest(cluster);
    let n = forest.len();

    // Exhaustive walk over ancestor-closed subsets, sizes bounded by `slots`.
    // Clusters are small; 2^n enumeration with the closure constraint is
    // exact and deterministic.
    let mut best: Option<(i64, Vec<usize>)> = None;
    let mut selection: Vec<bool> = vec![false; n];
    fn walk(
        pos: usize,
        chosen: usize,
        slots: usize,
        forest: &[(usize, Option<usize>)],
        cluster: &WeightedCluster,
        selection: &mut Vec<bool>,
        best: &mut Option<(i64, Vec<usize>)>,
    ) {
        if pos == forest.len() {
            let value: i64 = selection
                .iter()
                .enumerate()
                .filter(|(_, &s)| s)
                .map(|(k, _)| cluster.points()[forest[k].0].mult)
                .sum::<i64>()
                + (slots - chosen) as i64;
            let picked: Vec<usize> = (0..forest.len()).filter(|&k| selection[k]).collect();
            let better = match best {
                None => true,
                Some((v, sel)) => value > *v || (value == *v && picked < *sel),
            };
            if better {
                *best = Some((value, picked));
            }
            return;
        }
        // Skip this point.
        walk(pos + 1, chosen, slots, forest, cluster, selection, best);
        // Take it when a slot is free and the parent is taken.
        let parent_ok = forest[pos].1.map(|pp| selection[pp]).unwrap_or(true);
        if chosen < slots && parent_ok {
            selection[pos] = true;
            walk(pos + 1, chosen + 1, slots, forest, cluster, selection, best);
            selection[pos] = false;
        }
    }
    walk(0, 0, slots, &forest, cluster, &mut selection, &mut best);
    let (total, picked) = best.unwrap_or((slots as i64, Vec::new()));

    let mut centers: Vec<Center> = picked
        .iter()
        .map(|&k| {
            let p = &cluster.points()[forest[k].0];
            Center::Point {
                id: p.id.clone(),
                mu: p.mult,
            }
        })
        .collect();
    while centers.len() < slots {
        centers.push(Center::Generic { mu: 1 });
    }
    Ok(CenterSequence { centers, total })
}

/// A minimal plane model: exact degree, best-effort cluster.
#[derive(Clone, Debug, Serialize)]
pub struct MinimalPlaneModel {
    pub pair: PlanePair,
    pub degree: i64,
    pub top_multiplicity: i64,
    pub sequence: Option<CenterSequence>,
    pub trace: Vec<TraceStep>,
    /// The degree is exact; the output cluster relies on generic-position
    /// assumptions recorded in the trace.
    pub cluster_best_effort: bool,
}

/// Blow the resolved state down to the plane along the center sequence of
/// maximal total multiplicity. The plane degree is beta' minus that total;
/// F_0 states take one forced-up transformation at a maximal off-section
/// point first.
pub fn minimal_plane_model(r: &ResolvedRuledPair) -> Result<MinimalPlaneModel> {
    let mut trace = r.moves.clone();
    let b = r.base.a();
    let (state, sequence) = if b == 0 {
        let center = r
            .base
            .cluster()
            .level0_points()
            .filter(|p| !p.is_on_c0())
            .max_by_key(|p| (p.mult, std::cmp::Reverse(r.base.cluster().index_of(&p.id))))
            .map(|p| ElmCenter::Point(p.id.clone()))
            .unwrap_or(ElmCenter::Generic {
                on_c0: false,
                mult: 1,
            });
        let (next, step) = elm(&r.base, &center)?;
        trace.push(step);
        (next, None)
    } else {
        let seq = optimal_center_sequence(r)?;
        let mut state = r.base.clone();
        for center in &seq.centers {
            let elm_center = match center {
                Center::Point { id, .. } => ElmCenter::Point(id.clone()),
                Center::Generic { .. } => ElmCenter::Generic {
                    on_c0: false,
                    mult: 1,
                },
            };
            let (next, step) = elm(&state, &elm_center)?;
            trace.push(step);
            state = next;
        }
        (state, Some(seq))
    };

    if state.a() != 1 {
        return Err(EngineError::Internal(format!(
            "center walk ended on F_{}, expected F_1",
            state.a()
        )));
    }
    if let Some(seq) = &sequence {
        let expected = r.base.beta() - seq.total;
        if state.beta() != expected {
            return Err(EngineError::Internal(format!(
                "blow-down degree {} differs from beta' - total = {}",
                state.beta(),
                expected
            )));
        }
    }
    let (plane, step) = blow_down_to_plane(&state)?;
    trace.push(step);
    let top_multiplicity = plane.max_multiplicity_or_one();
    Ok(MinimalPlaneModel {
        degree: plane.degree(),
        top_multiplicity,
        pair: plane,
        sequence,
        trace,
        cluster_best_effort: true,
    })
}

/// Degree of the plane model attached to the section C0 + gamma f with the
/// given base-point multiplicities: alpha (gamma - b + 1) + beta' - sum(mu).
pub fn planar_system_degree(r: &ResolvedRuledPair, gamma: i64, mus: &[i64]) -> Result<i64> {
    let b = r.base.a();
    let alpha = r.base.alpha();
    let base_points = 2 * gamma + 1 - b;
    if base_points < 0 {
        return Err(EngineError::Precondition(format!(
            "section C0 + {gamma} f meets its deformations in 2*{gamma}+1-{b} < 0 points"
        )));
    }
    if mus.len() != base_points as usize {
        return Err(EngineError::ArityMismatch {
            expected: base_points as usize,
            got: mus.len(),
        });
    }
    for &mu in mus {
        if mu < 0 || mu > alpha {
            return Err(EngineError::Precondition(format!(
                "base multiplicity {mu} outside 0..={alpha}"
            )));
        }
    }
    Ok(alpha * (gamma - b + 1) + r.base.beta() - mus.iter().sum::<i64>())
}

/// Verdict status of the minimal-degree decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MinimalityStatus {
    Minimal,
    NotMinimal,
    Line,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictReason {
    /// m1 < d/3, certified by the Noether-Fano bound.
    SubcriticalMult,
    /// The input degree equals its minimal plane model degree.
    MinimalPlaneModel,
    /// kappa = 0: degree determined by alpha alone.
    KappaZeroDegree,
    /// A witness trace reaches a strictly smaller degree.
    Witness,
}

/// Output of [`is_minimal_degree`].
#[derive(Clone, Debug, Serialize)]
pub struct MinimalityVerdict {
    pub status: MinimalityStatus,
    pub reason: Option<VerdictReason>,
    pub minimal_degree: i64,
    /// For NotMinimal: a move list whose replay ends at a plane curve of the
    /// claimed smaller degree.
    pub witness_trace: Option<Vec<TraceStep>>,
    pub certificate: Option<Certificate>,
}

/// Best plane reduction reachable from one standard model.
fn model_reduction(model: &StandardModel) -> Result<Option<(i64, Vec<TraceStep>, PlanePair)>> {
    match (&model.state, model.kind) {
        (Pair::Plane(p), ModelKind::Line) => Ok(Some((1, model.trace.clone(), p.clone()))),
        (Pair::Plane(p), ModelKind::TerminalPlane) => {
            Ok(Some((p.degree(), model.trace.clone(), p.clone())))
        }
        (Pair::Ruled(r), _) => {
            let resolved = resolve_along_c0(r)?;
            let mpm = minimal_plane_model(&resolved)?;
            let mut trace = model.trace.clone();
            trace.extend(mpm.trace.clone());
            Ok(Some((mpm.degree, trace, mpm.pair)))
        }
        _ => Ok(None),
    }
}

/// Three largest level-0 multiplicities padded with 1 (generic smooth points).
fn top3_level0(pair: &PlanePair) -> (Vec<(Option<PointId>, i64)>, i64) {
    let mut pts: Vec<(Option<PointId>, i64)> = pair
        .cluster()
        .level0_points()
        .map(|p| (Some(p.id.clone()), p.mult))
        .collect();
    pts.sort_by_key(|&(_, m)| std::cmp::Reverse(m));
    pts.truncate(3);
    while pts.len() < 3 {
        pts.push((None, 1));
    }
    let sum = pts.iter().map(|(_, m)| m).sum();
    (pts, sum)
}

/// If three level-0 points (padded with generic smooth points) carry more
/// multiplicity than the degree, the standard quadratic transformation based
/// at them drops the degree to 2d - m1 - m2 - m3. The points cannot be
/// collinear (the line would meet the curve too often), so the map is
/// well defined on irreducible curves; expressed here as blow-up, two elms
/// and a blow-down.
fn quadratic_reduction(pair: &PlanePair) -> Result<Option<(i64, Vec<TraceStep>, PlanePair)>> {
    let d = pair.degree();
    let (pts, sum) = top3_level0(pair);
    if sum <= d {
        return Ok(None);
    }
    let first = match &pts[0].0 {
        Some(id) => crate::hirzebruch::MaxPointChoice::Point(id.clone()),
        None => crate::hirzebruch::MaxPointChoice::Generic,
    };
    let mut trace = Vec::new();
    let (state, step) = crate::hirzebruch::blow_up_max_point(pair, &first)?;
    trace.push(step);
    let mut state = state;
    for (id, mult) in &pts[1..] {
        let center = match id {
            Some(id) => ElmCenter::Point(id.clone()),
            None => ElmCenter::Generic {
                on_c0: false,
                mult: *mult,
            },
        };
        let (next, step) = elm(&state, &center)?;
        trace.push(step);
        state = next;
    }
    if state.a() != 1 {
        return Err(EngineError::Internal(
            "quadratic reduction did not return to F_1".into(),
        ));
    }
    let (plane, step) = blow_down_to_plane(&state)?;
    trace.push(step);
    if plane.degree() != 2 * d - sum {
        return Err(EngineError::Internal(format!(
            "quadratic reduction degree {} differs from 2d - (m1+m2+m3) = {}",
            plane.degree(),
            2 * d - sum
        )));
    }
    Ok(Some((plane.degree(), trace, plane)))
}

struct Search {
    branch_bound: usize,
}

impl Search {
    /// Smallest degree reachable from `pair`, with a witness. Recurses on the
    /// best reduction; the degree strictly decreases, so the search
    /// terminates.
    fn minimal_degree(
        &self,
        pair: &PlanePair,
        prefix: Vec<TraceStep>,
    ) -> Result<(i64, Vec<TraceStep>, Option<u8>)> {
        let d = pair.degree();
        if d == 1 {
            return Ok((1, prefix, None));
        }
        let m1 = pair.max_multiplicity_or_one();
        if 3 * m1 < d {
            // Noether-Fano territory: certified minimal, no search needed.
            return Ok((d, prefix, None));
        }

        let enumerated = enumerate_standard_models(pair, self.branch_bound)?;
        let mut kappa: Option<u8> = None;
        let mut best: Option<(i64, Vec<TraceStep>, PlanePair)> = None;
        for model in &enumerated.models {
            if kappa.is_none() {
                kappa = model.kappa;
            }
            if let Some((deg, trace, plane)) = model_reduction(model)? {
                if best.as_ref().map(|(b, _, _)| deg < *b).unwrap_or(true) {
                    best = Some((deg, trace, plane));
                }
            }
        }
        if let Some((deg, trace, plane)) = quadratic_reduction(pair)? {
            if best.as_ref().map(|(b, _, _)| deg < *b).unwrap_or(true) {
                best = Some((deg, trace, plane));
            }
        }

        match best {
            Some((deg, trace, plane)) if deg < d => {
                let mut full = prefix;
                full.extend(trace);
                let (final_deg, final_trace, _) = self.minimal_degree(&plane, full)?;
                Ok((final_deg, final_trace, kappa))
            }
            _ => Ok((d, prefix, kappa)),
        }
    }
}

/// Decide whether a plane pair has minimal degree in its Cremona class:
/// lines are minimal; m1 < d/3 is certified by the Noether-Fano bound;
/// otherwise the degree is compared with the minimal plane model degrees of
/// the enumerated standard models (kappa = 0 models all reduce to degree
/// 3 alpha / 2 when two of them exist).
pub fn is_minimal_degree(pair: &PlanePair, branch_bound: usize) -> Result<MinimalityVerdict> {
    let d = pair.degree();
    if d == 1 {
        return Ok(MinimalityVerdict {
            status: MinimalityStatus::Line,
            reason: None,
            minimal_degree: 1,
            witness_trace: None,
            certificate: None,
        });
    }
    let m1 = pair.max_multiplicity_or_one();
    if 3 * m1 < d {
        let certificate = noether_fano_for(pair)?;
        return Ok(MinimalityVerdict {
            status: MinimalityStatus::Minimal,
            reason: Some(VerdictReason::SubcriticalMult),
            minimal_degree: d,
            witness_trace: None,
            certificate: Some(certificate),
        });
    }

    let search = Search { branch_bound };
    let (minimal_degree, witness, kappa) = search.minimal_degree(pair, Vec::new())?;
    if minimal_degree > d {
        return Err(EngineError::Internal(format!(
            "search returned degree {minimal_degree} above the input degree {d}"
        )));
    }
    if minimal_degree == d {
        let reason = match kappa {
            Some(0) => VerdictReason::KappaZeroDegree,
            _ => VerdictReason::MinimalPlaneModel,
        };
        Ok(MinimalityVerdict {
            status: MinimalityStatus::Minimal,
            reason: Some(reason),
            minimal_degree: d,
            witness_trace: None,
            certificate: None,
        })
    } else {
        Ok(MinimalityVerdict {
            status: MinimalityStatus::NotMinimal,
            reason: Some(VerdictReason::Witness),
            minimal_degree,
            witness_trace: Some(witness),
            certificate: None,
        })
    }
}

fn noether_fano_for(pair: &PlanePair) -> Result<Certificate> {
    crate::cluster::noether_fano_plane_certificate(pair, pair.degree() - 1)
}

/// Minimal plane model report for a ruled input: resolve along C0, then blow
/// down along an optimal center sequence.
pub fn minimal_plane_report(pair: &RuledPair) -> Result<MinimalPlaneModel> {
    let resolved = resolve_along_c0(pair)?;
    minimal_plane_model(&resolved)
}

/// Convenience dispatch mirroring the engine's pair type.
pub fn minimal_degree_of(pair: &Pair, branch_bound: usize) -> Result<MinimalityVerdict> {
    match pair {
        Pair::Plane(p) => is_minimal_degree(p, branch_bound),
        Pair::Ruled(r) => {
            // For ruled inputs the verdict concerns the associated minimal
            // plane model; reuse the plane decision on it.
            let mpm = minimal_plane_report(r)?;
            is_minimal_degree(&mpm.pair, branch_bound)
        }
    }
}

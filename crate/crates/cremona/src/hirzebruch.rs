//! Ruled-pair states on Hirzebruch surfaces, elementary transformations, the
//! nef/Kodaira bookkeeping of the adjoint class, and the standard-model
//! reduction.
//!
//! Class updates use the closed formulas (up: beta + (alpha - m), down:
//! beta - m, new point of multiplicity alpha - m); [`crate::lattice::elm_oracle`]
//! recomputes the same data from blow-up + contraction and is kept as an
//! independent oracle, never called from here. On F_0 every elementary
//! transformation goes up and the negative section of the target is the
//! ruling fiber through the center, so the marked section is re-chosen there;
//! the bookkeeping below follows the lattice on this point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::cluster::{
    classify_singularities, log_discrepancies, validate_cluster, ClassificationScope,
    ClusterContext, ClusterPoint, PlanePair, PointId, SingularityClass, ValidationReport,
    WeightedCluster,
};
use crate::error::{EngineError, Result};

/// Hard cap on moves in a single reduction; the lexicographic termination
/// measure makes this unreachable for consistent inputs.
const MOVE_CAP: usize = 100_000;

/// A curve of class alpha C0 + beta f on the Hirzebruch surface F_a together
/// with its weighted cluster. Level-0 points carry on-C0 flags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuledPair {
    a: i64,
    alpha: i64,
    beta: i64,
    cluster: WeightedCluster,
}

impl RuledPair {
    pub fn new(
        a: i64,
        alpha: i64,
        beta: i64,
        cluster: WeightedCluster,
    ) -> std::result::Result<Self, ValidationReport> {
        let mut report = validate_cluster(&cluster, ClusterContext::Ruled);
        let push = |report: &mut ValidationReport, message: String| {
            report
                .violations
                .push(crate::cluster::Violation { id: None, message });
        };
        if a < 0 {
            push(&mut report, format!("index {a} < 0"));
        }
        if alpha < 1 {
            push(&mut report, format!("alpha {alpha} < 1"));
        }
        if beta < 0 {
            push(&mut report, format!("beta {beta} < 0"));
        }
        let bound = crate::cluster::MAX_CLASS_VALUE;
        if a > bound || alpha > bound || beta > bound {
            push(
                &mut report,
                format!("class data (a={a}, alpha={alpha}, beta={beta}) exceeds {bound}"),
            );
        }
        let budget = beta - a * alpha;
        if a >= 1 && budget < 0 {
            push(
                &mut report,
                format!(
                    "class ({alpha} C0 + {beta} f) meets C0 negatively: beta - a*alpha = {budget}"
                ),
            );
        }
        let on_c0_sum = cluster.on_c0_mult_sum();
        if report.is_valid() && on_c0_sum > budget {
            push(
                &mut report,
                format!(
                    "on-C0 multiplicities sum to {on_c0_sum}, exceeding beta - a*alpha = {budget}"
                ),
            );
        }
        let pair = RuledPair {
            a,
            alpha,
            beta,
            cluster,
        };
        if report.is_valid() && pair.genus_i64() < 0 {
            push(
                &mut report,
                format!("combinatorial genus {} < 0", pair.genus_i64()),
            );
        }
        if report.is_valid() {
            Ok(pair)
        } else {
            Err(report)
        }
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn alpha(&self) -> i64 {
        self.alpha
    }

    pub fn beta(&self) -> i64 {
        self.beta
    }

    pub fn cluster(&self) -> &WeightedCluster {
        &self.cluster
    }

    fn genus_i64(&self) -> i64 {
        let (a, al, be) = (self.a, self.alpha, self.beta);
        let class_part = (-a * al * al + 2 * al * be + a * al - 2 * al - 2 * be) / 2 + 1;
        class_part - self.cluster.delta_sum()
    }

    /// Arithmetic genus of the class minus the cluster deltas.
    pub fn combinatorial_genus(&self) -> BigRational {
        BigRational::from(BigInt::from(self.genus_i64()))
    }
}

/// A plane or ruled pair; the common input type of the reduction drivers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "surface")]
pub enum Pair {
    Plane(PlanePair),
    Ruled(RuledPair),
}

impl Pair {
    pub fn combinatorial_genus(&self) -> BigRational {
        match self {
            Pair::Plane(p) => p.combinatorial_genus(),
            Pair::Ruled(r) => r.combinatorial_genus(),
        }
    }

    pub fn cluster(&self) -> &WeightedCluster {
        match self {
            Pair::Plane(p) => p.cluster(),
            Pair::Ruled(r) => r.cluster(),
        }
    }
}

/// Adjoint class data for K + c*Cbar. At c = 2/alpha the class is numerically
/// lambda*f with lambda = 2 beta/alpha - (a + 2).
#[derive(Clone, Debug, Serialize)]
pub struct AdjointData {
    #[serde(serialize_with = "crate::ser_rational")]
    pub coefficient: BigRational,
    #[serde(serialize_with = "crate::ser_opt_rational")]
    pub lambda: Option<BigRational>,
    pub nef: bool,
}

fn rat(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

/// Nef test of K + c*Cbar against the extremal rays f and C0 of F_a.
pub fn adjoint(pair: &RuledPair, c: &BigRational) -> AdjointData {
    let (a, alpha, beta) = (pair.a, pair.alpha, pair.beta);
    // (K + c Cbar).f = c*alpha - 2; (K + c Cbar).C0 = (a - 2) + c*(beta - a*alpha).
    let on_fiber = c * rat(alpha) - rat(2);
    let on_section = rat(a - 2) + c * rat(beta - a * alpha);
    let nef = !on_fiber.is_negative() && !on_section.is_negative();
    let lambda = if c * rat(alpha) == rat(2) {
        Some(rat(2 * beta) / rat(alpha) - rat(a + 2))
    } else {
        None
    };
    AdjointData {
        coefficient: c.clone(),
        lambda,
        nef,
    }
}

/// Log Kodaira dimension of a nef-adjoint ruled model: 0 iff 2 beta equals
/// alpha (a + 2), else 1.
pub fn kodaira_dimension(pair: &RuledPair) -> Result<u8> {
    let c = BigRational::new(BigInt::from(2), BigInt::from(pair.alpha));
    let adj = adjoint(pair, &c);
    if !adj.nef {
        return Err(EngineError::Precondition(format!(
            "adjoint K + 2/{} Cbar is not nef on this state",
            pair.alpha
        )));
    }
    Ok(if 2 * pair.beta == pair.alpha * (pair.a + 2) {
        0
    } else {
        1
    })
}

/// Moves recorded in reduction traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveOp {
    BlowUp,
    Elm,
    RulingSwap,
    BlowDown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

/// Replayable description of an elm/blowup center.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "center")]
pub enum CenterDesc {
    Point { id: PointId, mult: i64, on_c0: bool },
    Generic { mult: i64, on_c0: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewPointDesc {
    /// Present when the point entered the cluster (multiplicity at least 2).
    pub id: Option<PointId>,
    pub mult: i64,
    pub on_c0: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SurfaceDesc {
    Plane { degree: i64 },
    Ruled { a: i64, alpha: i64, beta: i64 },
}

/// One move of a trace, with the state reached after it and the
/// generic-position assumptions it relies on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub op: MoveOp,
    pub center: Option<CenterDesc>,
    pub direction: Option<Direction>,
    pub new_point: Option<NewPointDesc>,
    pub surface_after: SurfaceDesc,
    /// Line reductions discard leftover smooth marks at the final blow-down.
    pub drops_smooth_marks: bool,
    pub assumptions: Vec<String>,
}

impl TraceStep {
    fn new(op: MoveOp, surface_after: SurfaceDesc) -> Self {
        TraceStep {
            op,
            center: None,
            direction: None,
            new_point: None,
            surface_after,
            drops_smooth_marks: false,
            assumptions: Vec::new(),
        }
    }
}

fn ruled_desc(pair: &RuledPair) -> SurfaceDesc {
    SurfaceDesc::Ruled {
        a: pair.a,
        alpha: pair.alpha,
        beta: pair.beta,
    }
}

/// Choice of the point blown up first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaxPointChoice {
    Point(PointId),
    /// A general smooth point of the curve; only legal when the maximal
    /// multiplicity is 1.
    Generic,
}

/// Center of an elementary transformation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ElmCenter {
    Point(PointId),
    Generic { on_c0: bool, mult: i64 },
}

/// Remove a level-0 point from the cluster: its children become level-0 with
/// the given flag, and every proximity reference to it is dropped.
fn remove_level0_point(
    cluster: &WeightedCluster,
    center: &PointId,
    children_on_c0: bool,
    assumptions: &mut Vec<String>,
) -> WeightedCluster {
    let mut points = Vec::with_capacity(cluster.len().saturating_sub(1));
    let mut had_children = false;
    for p in cluster.points() {
        if &p.id == center {
            continue;
        }
        let mut q = p.clone();
        if q.parent.as_ref() == Some(center) {
            had_children = true;
            q.parent = None;
            q.proximate_to.remove(center);
            if !q.proximate_to.is_empty() {
                // A direct child of a level-0 point cannot be a satellite.
                assumptions.push(format!(
                    "stray proximity of {} to {:?} dropped",
                    q.id, q.proximate_to
                ));
                q.proximate_to.clear();
            }
            q.on_c0 = Some(children_on_c0);
        } else if q.proximate_to.contains(center) {
            q.proximate_to.remove(center);
            assumptions.push(format!(
                "satellite proximity of {} to removed point {} dropped (generic position)",
                q.id, center
            ));
        }
        points.push(q);
    }
    if had_children {
        assumptions.push(format!(
            "children of {center} placed at generic positions on the new fiber"
        ));
    }
    WeightedCluster::new(points)
}

fn invalid(report: ValidationReport, context: &str) -> EngineError {
    EngineError::InvariantViolation {
        steps: 0,
        message: format!("{context}: {report}"),
    }
}

/// Blow up a level-0 point of maximal multiplicity (or a general smooth point
/// when the maximum is 1): the result lives on F_1 with class
/// (d - m1) C0 + d f, the children of the chosen point land on C0, and all
/// other points stay off C0.
pub fn blow_up_max_point(
    pair: &PlanePair,
    choice: &MaxPointChoice,
) -> Result<(RuledPair, TraceStep)> {
    let d = pair.degree();
    let cluster = pair.cluster();
    let m1 = cluster.max_multiplicity_or_one();
    let mut assumptions = Vec::new();

    let (center_desc, m_center, working) = match choice {
        MaxPointChoice::Point(id) => {
            let p = cluster
                .point(id)
                .ok_or_else(|| EngineError::Precondition(format!("unknown point {id}")))?;
            if !p.is_level0() {
                return Err(EngineError::Precondition(format!(
                    "{id} is not a level-0 point"
                )));
            }
            if p.mult != m1 {
                return Err(EngineError::Precondition(format!(
                    "{id} has multiplicity {}, not maximal ({m1})",
                    p.mult
                )));
            }
            let next = remove_level0_point(cluster, id, true, &mut assumptions);
            (
                CenterDesc::Point {
                    id: id.clone(),
                    mult: p.mult,
                    on_c0: false,
                },
                p.mult,
                next,
            )
        }
        MaxPointChoice::Generic => {
            if m1 != 1 {
                return Err(EngineError::Precondition(format!(
                    "a generic first center needs maximal multiplicity 1, found {m1}"
                )));
            }
            (
                CenterDesc::Generic {
                    mult: 1,
                    on_c0: false,
                },
                1,
                cluster.clone(),
            )
        }
    };

    // Every level-0 point that did not just land on C0 is off C0.
    let mut points: Vec<ClusterPoint> = Vec::with_capacity(working.len());
    for q in working.points() {
        let mut q = q.clone();
        if q.is_level0() && q.on_c0.is_none() {
            q.on_c0 = Some(false);
        }
        points.push(q);
    }
    let working = WeightedCluster::new(points);

    let alpha = d - m_center;
    if alpha < 1 {
        return Err(EngineError::Precondition(format!(
            "degree {d} minus multiplicity {m_center} leaves no curve class on F_1"
        )));
    }
    let ruled =
        RuledPair::new(1, alpha, d, working).map_err(|r| invalid(r, "blow_up_max_point"))?;
    let mut step = TraceStep::new(MoveOp::BlowUp, ruled_desc(&ruled));
    step.center = Some(center_desc);
    step.assumptions = assumptions;
    Ok((ruled, step))
}

/// Elementary transformation at a level-0 center (or a generic point with
/// multiplicity 0 or 1). The surface index moves up iff the center lies on C0
/// (forced up on F_0); the class follows the beta + (alpha - m) / beta - m
/// branches; a new point of multiplicity alpha - m is created, off C0 for
/// upward moves and on C0 for downward moves, entering the cluster only when
/// its multiplicity is at least 2.
pub fn elm(pair: &RuledPair, center: &ElmCenter) -> Result<(RuledPair, TraceStep)> {
    let alpha = pair.alpha;
    let mut assumptions = Vec::new();

    let (desc, m, on_c0, working) = match center {
        ElmCenter::Point(id) => {
            let p = pair
                .cluster
                .point(id)
                .ok_or_else(|| EngineError::Precondition(format!("unknown point {id}")))?;
            if !p.is_level0() {
                return Err(EngineError::Precondition(format!(
                    "elm center {id} is not a level-0 point"
                )));
            }
            let on_c0 = p.is_on_c0();
            let m = p.mult;
            let next = remove_level0_point(&pair.cluster, id, false, &mut assumptions);
            (
                CenterDesc::Point {
                    id: id.clone(),
                    mult: m,
                    on_c0,
                },
                m,
                on_c0,
                next,
            )
        }
        ElmCenter::Generic { on_c0, mult } => {
            if *mult < 0 || *mult > 1 {
                return Err(EngineError::Precondition(format!(
                    "a generic elm center has multiplicity 0 or 1, got {mult}"
                )));
            }
            (
                CenterDesc::Generic {
                    mult: *mult,
                    on_c0: *on_c0,
                },
                *mult,
                *on_c0,
                pair.cluster.clone(),
            )
        }
    };

    if m > alpha {
        return Err(EngineError::Precondition(format!(
            "center multiplicity {m} exceeds alpha = {alpha}: the fiber would be contained in the curve"
        )));
    }

    let up = on_c0 || pair.a == 0;
    let (next_a, next_beta) = if up {
        (pair.a + 1, pair.beta + (alpha - m))
    } else {
        (pair.a - 1, pair.beta - m)
    };
    let new_mult = alpha - m;
    // Downward moves land the new point on the target section; upward moves
    // leave it off. On F_0 with an off-section center the marked section is
    // replaced by the ruling fiber through the center, so previously flagged
    // points lose their marks.
    let new_on_c0 = !up;
    let mut working = working;
    if pair.a == 0 && !on_c0 {
        let mut changed = false;
        let mut points: Vec<ClusterPoint> = Vec::with_capacity(working.len());
        for q in working.points() {
            let mut q = q.clone();
            if q.is_on_c0() {
                q.on_c0 = Some(false);
                changed = true;
            }
            points.push(q);
        }
        working = WeightedCluster::new(points);
        if changed {
            assumptions.push(
                "section re-marked on F0: points on the old marked fiber are now off C0".into(),
            );
        }
    }

    let new_point = if new_mult >= 2 {
        let id = working.fresh_id("q");
        working.push(ClusterPoint {
            id: id.clone(),
            mult: new_mult,
            parent: None,
            proximate_to: BTreeSet::new(),
            on_c0: Some(new_on_c0),
        });
        NewPointDesc {
            id: Some(id),
            mult: new_mult,
            on_c0: new_on_c0,
        }
    } else {
        NewPointDesc {
            id: None,
            mult: new_mult,
            on_c0: new_on_c0,
        }
    };

    let next = RuledPair::new(next_a, alpha, next_beta, working).map_err(|r| invalid(r, "elm"))?;
    let mut step = TraceStep::new(MoveOp::Elm, ruled_desc(&next));
    step.center = Some(desc);
    step.direction = Some(if up { Direction::Up } else { Direction::Down });
    step.new_point = Some(new_point);
    step.assumptions = assumptions;
    Ok((next, step))
}

/// Exchange the two rulings of F_0: the class coefficients swap and the
/// marked section is re-chosen in the other ruling.
pub fn ruling_swap(pair: &RuledPair) -> Result<(RuledPair, TraceStep)> {
    if pair.a != 0 {
        return Err(EngineError::Precondition(format!(
            "ruling swap only applies on F_0, found F_{}",
            pair.a
        )));
    }
    if pair.beta < 1 {
        return Err(EngineError::Precondition(
            "ruling swap needs beta >= 1 to keep a curve class".into(),
        ));
    }
    let mut assumptions = Vec::new();
    let mut points: Vec<ClusterPoint> = Vec::with_capacity(pair.cluster.len());
    let mut changed = false;
    for q in pair.cluster.points() {
        let mut q = q.clone();
        if q.is_on_c0() {
            q.on_c0 = Some(false);
            changed = true;
        }
        points.push(q);
    }
    if changed {
        assumptions.push("marked section re-chosen in the other ruling; flags reset off C0".into());
    }
    let next = RuledPair::new(0, pair.beta, pair.alpha, WeightedCluster::new(points))
        .map_err(|r| invalid(r, "ruling_swap"))?;
    let mut step = TraceStep::new(MoveOp::RulingSwap, ruled_desc(&next));
    step.assumptions = assumptions;
    Ok((next, step))
}

/// Blow down the exceptional section of an F_1 state: the result is a plane
/// curve of degree beta whose blown-down section contributes a point of
/// multiplicity beta - alpha carrying the on-C0 points as infinitely near
/// children.
pub fn blow_down_to_plane(pair: &RuledPair) -> Result<(PlanePair, TraceStep)> {
    blow_down_internal(pair, false)
}

fn blow_down_internal(pair: &RuledPair, drop_smooth_marks: bool) -> Result<(PlanePair, TraceStep)> {
    if pair.a != 1 {
        return Err(EngineError::Precondition(format!(
            "blow-down needs an F_1 state, found F_{}",
            pair.a
        )));
    }
    let degree = pair.beta;
    let center_mult = pair.beta - pair.alpha;
    let mut assumptions = Vec::new();

    let has_on_c0 = pair.cluster.points().iter().any(|p| p.is_on_c0());
    let keep_center = if drop_smooth_marks {
        center_mult >= 2
    } else {
        center_mult >= 2 || (center_mult == 1 && has_on_c0)
    };
    let center_id = if keep_center {
        Some(pair.cluster.fresh_id("p"))
    } else {
        if center_mult >= 1 {
            assumptions.push("smooth blow-down point recorded in trace only".into());
        }
        None
    };

    let mut points: Vec<ClusterPoint> = Vec::new();
    if let Some(id) = &center_id {
        points.push(ClusterPoint::free(id.clone(), center_mult));
    }
    for q in pair.cluster.points() {
        let mut q = q.clone();
        if drop_smooth_marks && q.mult <= 1 {
            assumptions.push(format!("smooth mark {} discarded on the plane model", q.id));
            continue;
        }
        if q.is_on_c0() {
            let center = center_id
                .as_ref()
                .ok_or_else(|| EngineError::InvariantViolation {
                    steps: 0,
                    message: format!("on-C0 point {} with no blow-down center to attach to", q.id),
                })?;
            q.parent = Some(center.clone());
            q.proximate_to = BTreeSet::from([center.clone()]);
        }
        q.on_c0 = None;
        points.push(q);
    }

    let plane = PlanePair::new(degree, WeightedCluster::new(points))
        .map_err(|r| invalid(r, "blow_down_to_plane"))?;
    let mut step = TraceStep::new(MoveOp::BlowDown, SurfaceDesc::Plane { degree });
    step.new_point = Some(NewPointDesc {
        id: center_id,
        mult: center_mult,
        on_c0: false,
    });
    step.drops_smooth_marks = drop_smooth_marks;
    step.assumptions = assumptions;
    Ok((plane, step))
}

/// Tie-breaking policy: centers listed in `prefer` win (in listing order);
/// remaining candidates are ordered by multiplicity descending, then input
/// order.
#[derive(Clone, Debug, Default)]
pub struct TieBreak {
    pub prefer: Vec<PointId>,
}

impl TieBreak {
    pub fn prefer(ids: &[&str]) -> Self {
        TieBreak {
            prefer: ids.iter().map(|s| PointId::from(*s)).collect(),
        }
    }

    fn rank(&self, id: &PointId) -> usize {
        self.prefer
            .iter()
            .position(|p| p == id)
            .unwrap_or(self.prefer.len())
    }
}

/// The four output shapes of the standard-model reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ModelKind {
    Line,
    TerminalPlane,
    F0Terminal,
    FaCanonical,
}

/// A standard model with its full reduction trace.
#[derive(Clone, Debug, Serialize)]
pub struct StandardModel {
    pub kind: ModelKind,
    pub state: Pair,
    /// Log Kodaira dimension, for ruled kinds.
    pub kappa: Option<u8>,
    pub trace: Vec<TraceStep>,
}

impl StandardModel {
    /// Deduplication key: kind, surface data and Kodaira dimension.
    pub fn key(&self) -> (ModelKind, SurfaceDesc, Option<u8>) {
        let desc = match &self.state {
            Pair::Plane(p) => SurfaceDesc::Plane { degree: p.degree() },
            Pair::Ruled(r) => ruled_desc(r),
        };
        (self.kind, desc, self.kappa)
    }
}

struct Driver<'a> {
    policy: &'a TieBreak,
    explore_all: bool,
    budget: usize,
    leaves: usize,
    truncated: bool,
    models: Vec<StandardModel>,
    keys: BTreeSet<String>,
}

impl<'a> Driver<'a> {
    fn new(policy: &'a TieBreak, explore_all: bool, budget: usize) -> Self {
        Driver {
            policy,
            explore_all,
            budget,
            leaves: 0,
            truncated: false,
            models: Vec::new(),
            keys: BTreeSet::new(),
        }
    }

    fn push_model(&mut self, model: StandardModel) {
        self.leaves += 1;
        let key = format!("{:?}", model.key());
        if self.keys.insert(key) {
            self.models.push(model);
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.leaves >= self.budget {
            self.truncated = true;
            return true;
        }
        false
    }

    fn drive_plane(&mut self, pair: &PlanePair, trace: Vec<TraceStep>) -> Result<()> {
        if trace.len() > MOVE_CAP {
            return Err(EngineError::InvariantViolation {
                steps: trace.len(),
                message: "move cap exceeded".into(),
            });
        }
        let d = pair.degree();
        let m1 = pair.max_multiplicity_or_one();

        if d == 1 || d - m1 == 1 {
            let (line, steps) = line_reduce_plane(pair, self.policy)?;
            let mut full = trace;
            full.extend(steps);
            self.push_model(StandardModel {
                kind: ModelKind::Line,
                state: Pair::Plane(line),
                kappa: None,
                trace: full,
            });
            return Ok(());
        }

        let c = BigRational::new(BigInt::from(3), BigInt::from(d));
        let classification =
            classify_singularities(pair.cluster(), &c, ClassificationScope::Global)?;
        if classification.class == SingularityClass::Terminal {
            self.push_model(StandardModel {
                kind: ModelKind::TerminalPlane,
                state: Pair::Plane(pair.clone()),
                kappa: None,
                trace,
            });
            return Ok(());
        }

        // Initial centers: every level-0 point of maximal multiplicity, plus
        // the generic point when the maximum is 1.
        let mut choices: Vec<MaxPointChoice> = pair
            .cluster()
            .level0_points()
            .filter(|p| p.mult == m1)
            .map(|p| MaxPointChoice::Point(p.id.clone()))
            .collect();
        choices.sort_by_key(|ch| match ch {
            MaxPointChoice::Point(id) => (
                self.policy.rank(id),
                pair.cluster().index_of(id).unwrap_or(usize::MAX),
            ),
            MaxPointChoice::Generic => (usize::MAX, usize::MAX),
        });
        if m1 == 1 {
            choices.push(MaxPointChoice::Generic);
        }
        let explored = if self.explore_all {
            choices
        } else {
            choices.into_iter().take(1).collect()
        };
        for choice in explored {
            if self.out_of_budget() {
                break;
            }
            let (ruled, step) = blow_up_max_point(pair, &choice)?;
            let mut next_trace = trace.clone();
            next_trace.push(step);
            self.drive_ruled(&ruled, next_trace, d)?;
        }
        Ok(())
    }

    fn drive_ruled(
        &mut self,
        pair: &RuledPair,
        trace: Vec<TraceStep>,
        degree_watermark: i64,
    ) -> Result<()> {
        if trace.len() > MOVE_CAP {
            return Err(EngineError::InvariantViolation {
                steps: trace.len(),
                message: "move cap exceeded".into(),
            });
        }
        let alpha = pair.alpha;
        if alpha == 1 {
            let (line, steps) = line_reduce_ruled(pair)?;
            let mut full = trace;
            full.extend(steps);
            self.push_model(StandardModel {
                kind: ModelKind::Line,
                state: Pair::Plane(line),
                kappa: None,
                trace: full,
            });
            return Ok(());
        }
        let c = BigRational::new(BigInt::from(2), BigInt::from(alpha));
        let bads = bad_centers(pair, &c)?;
        if !bads.is_empty() {
            let explored: Vec<PointId> = if self.explore_all {
                bads
            } else {
                let mut ordered = bads;
                ordered.sort_by_key(|id| {
                    let mult = pair.cluster.point(id).map(|p| p.mult).unwrap_or(0);
                    (
                        self.policy.rank(id),
                        -mult,
                        pair.cluster.index_of(id).unwrap_or(usize::MAX),
                    )
                });
                ordered.into_iter().take(1).collect()
            };
            for id in explored {
                if self.out_of_budget() {
                    break;
                }
                // A center that cannot be transformed (multiplicity above
                // alpha) means the input cluster is combinatorially valid but
                // not realizable; report it with the trace prefix.
                let (next, step) = elm(pair, &ElmCenter::Point(id)).map_err(|e| match e {
                    EngineError::Precondition(message) => EngineError::InvariantViolation {
                        steps: trace.len(),
                        message: format!("inconsistent input cluster: {message}"),
                    },
                    other => other,
                })?;
                let mut next_trace = trace.clone();
                next_trace.push(step);
                self.drive_ruled(&next, next_trace, degree_watermark)?;
            }
            return Ok(());
        }

        let adj = adjoint(pair, &c);
        if pair.a == 1 && !adj.nef {
            // 2 beta < 3 alpha: the plane model below has strictly smaller
            // degree and the induction recurses on it.
            let (plane, step) = blow_down_internal(pair, false)?;
            if plane.degree() >= degree_watermark {
                return Err(EngineError::InvariantViolation {
                    steps: trace.len(),
                    message: format!(
                        "degree failed to decrease across blow-down: {} >= {}",
                        plane.degree(),
                        degree_watermark
                    ),
                });
            }
            let mut next_trace = trace;
            next_trace.push(step);
            return self.drive_plane(&plane, next_trace);
        }
        if pair.a == 0 && pair.beta < alpha {
            let (next, step) = ruling_swap(pair)?;
            if next.alpha >= alpha {
                return Err(EngineError::InvariantViolation {
                    steps: trace.len(),
                    message: "alpha failed to decrease across ruling swap".into(),
                });
            }
            let mut next_trace = trace;
            next_trace.push(step);
            return self.drive_ruled(&next, next_trace, degree_watermark);
        }

        // Final state: re-validate the model invariants.
        if !adj.nef {
            return Err(EngineError::InvariantViolation {
                steps: trace.len(),
                message: format!("final state on F_{} has non-nef adjoint", pair.a),
            });
        }
        let global = classify_singularities(&pair.cluster, &c, ClassificationScope::Global)?;
        if global.class == SingularityClass::NonCanonical {
            return Err(EngineError::InvariantViolation {
                steps: trace.len(),
                message: "final state is not canonical".into(),
            });
        }
        let along = classify_singularities(&pair.cluster, &c, ClassificationScope::AlongC0)?;
        if along.class != SingularityClass::Terminal {
            return Err(EngineError::InvariantViolation {
                steps: trace.len(),
                message: "final state is not terminal along C0".into(),
            });
        }
        let kappa = kodaira_dimension(pair)?;
        let kind = if pair.a == 0 && global.class == SingularityClass::Terminal {
            ModelKind::F0Terminal
        } else {
            ModelKind::FaCanonical
        };
        self.push_model(StandardModel {
            kind,
            state: Pair::Ruled(pair.clone()),
            kappa: Some(kappa),
            trace,
        });
        Ok(())
    }
}

/// Elm candidates: level-0 roots whose subtree contains a non-canonical
/// valuation, and on-C0 roots whose subtree is not terminal.
fn bad_centers(pair: &RuledPair, c: &BigRational) -> Result<Vec<PointId>> {
    let report = log_discrepancies(&pair.cluster, c)?;
    let mut out = Vec::new();
    for root in pair.cluster.level0_points() {
        let subtree = pair.cluster.subtree_indices(&root.id);
        let min = subtree.iter().map(|&i| &report.entries[i].1).min().cloned();
        let min = match min {
            Some(m) => m,
            None => continue,
        };
        let non_canonical = min.is_negative();
        let non_terminal_on_c0 = root.is_on_c0() && !min.is_positive();
        if non_canonical || non_terminal_on_c0 {
            out.push(root.id.clone());
        }
    }
    Ok(out)
}

/// Reduce a plane pair with d - m1 = 1 (or d = 1) to an actual line through
/// engine moves.
fn line_reduce_plane(pair: &PlanePair, policy: &TieBreak) -> Result<(PlanePair, Vec<TraceStep>)> {
    if pair.degree() == 1 {
        return Ok((pair.clone(), Vec::new()));
    }
    let m1 = pair.max_multiplicity_or_one();
    if pair.degree() - m1 != 1 {
        return Err(EngineError::Precondition(format!(
            "line reduction needs d - m1 = 1, got d = {}, m1 = {m1}",
            pair.degree()
        )));
    }
    let mut choices: Vec<MaxPointChoice> = pair
        .cluster()
        .level0_points()
        .filter(|p| p.mult == m1)
        .map(|p| MaxPointChoice::Point(p.id.clone()))
        .collect();
    choices.sort_by_key(|ch| match ch {
        MaxPointChoice::Point(id) => (
            policy.rank(id),
            pair.cluster().index_of(id).unwrap_or(usize::MAX),
        ),
        MaxPointChoice::Generic => (usize::MAX, usize::MAX),
    });
    let choice = match choices.into_iter().next() {
        Some(first) => first,
        None => MaxPointChoice::Generic,
    };
    let (ruled, step) = blow_up_max_point(pair, &choice)?;
    let (line, mut steps) = line_reduce_ruled(&ruled)?;
    steps.insert(0, step);
    Ok((line, steps))
}

/// Reduce a ruled pair with alpha = 1 (the strict transform is a section) to
/// a line: clear on-C0 marks upward, then walk beta down with elm pairs and
/// blow down from (F_1, C0 + f).
fn line_reduce_ruled(pair: &RuledPair) -> Result<(PlanePair, Vec<TraceStep>)> {
    if pair.alpha != 1 {
        return Err(EngineError::Precondition(format!(
            "line reduction needs alpha = 1, got {}",
            pair.alpha
        )));
    }
    let mut state = pair.clone();
    let mut steps = Vec::new();
    let mut guard = 0usize;
    loop {
        guard += 1;
        if guard > MOVE_CAP {
            return Err(EngineError::InvariantViolation {
                steps: steps.len(),
                message: "line reduction failed to terminate".into(),
            });
        }
        if let Some(p) = state.cluster.points().iter().find(|p| p.is_on_c0()) {
            let id = p.id.clone();
            let (next, step) = elm(&state, &ElmCenter::Point(id))?;
            state = next;
            steps.push(step);
            continue;
        }
        if state.a == 1 && state.beta == 1 {
            break;
        }
        // Preferred center: an explicit off-C0 level-0 mult-1 point, else a
        // generic smooth curve point off C0.
        let explicit = state
            .cluster
            .level0_points()
            .find(|p| !p.is_on_c0() && p.mult == 1)
            .map(|p| p.id.clone());
        let center = match explicit {
            Some(id) => ElmCenter::Point(id),
            None => ElmCenter::Generic {
                on_c0: false,
                mult: 1,
            },
        };
        // a >= 1: walk down; a = 0: forced up with no new point (alpha - 1 = 0).
        let (next, step) = elm(&state, &center)?;
        state = next;
        steps.push(step);
    }
    let (line, step) = blow_down_internal(&state, true)?;
    steps.push(step);
    if line.degree() != 1 {
        return Err(EngineError::Internal(
            "line reduction did not end at degree 1".into(),
        ));
    }
    Ok((line, steps))
}

/// Run the standard-model reduction with the given tie-break policy.
pub fn standard_model(input: &Pair, policy: &TieBreak) -> Result<StandardModel> {
    let mut driver = Driver::new(policy, false, usize::MAX);
    match input {
        Pair::Plane(p) => driver.drive_plane(p, Vec::new())?,
        Pair::Ruled(r) => driver.drive_ruled(r, Vec::new(), i64::MAX)?,
    }
    driver
        .models
        .into_iter()
        .next()
        .ok_or_else(|| EngineError::Internal("reduction produced no model".into()))
}

/// All standard models reachable over first-center choices and orderings of
/// bad-center choices, deduplicated by (kind, surface, kappa).
#[derive(Clone, Debug, Serialize)]
pub struct EnumeratedModels {
    pub models: Vec<StandardModel>,
    pub truncated: bool,
}

pub fn enumerate_standard_models(
    pair: &PlanePair,
    branch_bound: usize,
) -> Result<EnumeratedModels> {
    let policy = TieBreak::default();
    let mut driver = Driver::new(&policy, true, branch_bound.max(1));
    driver.drive_plane(pair, Vec::new())?;
    let mut models = driver.models;
    models.sort_by_key(|m| format!("{:?}", m.key()));
    Ok(EnumeratedModels {
        models,
        truncated: driver.truncated,
    })
}

/// Enumerate models of a ruled input.
pub fn enumerate_standard_models_ruled(
    pair: &RuledPair,
    branch_bound: usize,
) -> Result<EnumeratedModels> {
    let policy = TieBreak::default();
    let mut driver = Driver::new(&policy, true, branch_bound.max(1));
    driver.drive_ruled(pair, Vec::new(), i64::MAX)?;
    let mut models = driver.models;
    models.sort_by_key(|m| format!("{:?}", m.key()));
    Ok(EnumeratedModels {
        models,
        truncated: driver.truncated,
    })
}

/// Re-execute a trace from an initial pair, verifying the recorded state
/// after every move. Returns the final pair; errors carry the index of the
/// first diverging step.
pub fn replay(initial: &Pair, steps: &[TraceStep]) -> Result<Pair> {
    let mut state = initial.clone();
    for (idx, step) in steps.iter().enumerate() {
        let mismatch = |message: String| EngineError::InvariantViolation {
            steps: idx,
            message,
        };
        state = match (&state, step.op) {
            (Pair::Plane(p), MoveOp::BlowUp) => {
                let choice = match &step.center {
                    Some(CenterDesc::Point { id, .. }) => MaxPointChoice::Point(id.clone()),
                    Some(CenterDesc::Generic { .. }) => MaxPointChoice::Generic,
                    None => return Err(mismatch("blow-up step without center".into())),
                };
                let (ruled, _) = blow_up_max_point(p, &choice)?;
                Pair::Ruled(ruled)
            }
            (Pair::Ruled(r), MoveOp::Elm) => {
                let center = match &step.center {
                    Some(CenterDesc::Point { id, .. }) => ElmCenter::Point(id.clone()),
                    Some(CenterDesc::Generic { mult, on_c0 }) => ElmCenter::Generic {
                        on_c0: *on_c0,
                        mult: *mult,
                    },
                    None => return Err(mismatch("elm step without center".into())),
                };
                let (next, _) = elm(r, &center)?;
                Pair::Ruled(next)
            }
            (Pair::Ruled(r), MoveOp::RulingSwap) => {
                let (next, _) = ruling_swap(r)?;
                Pair::Ruled(next)
            }
            (Pair::Ruled(r), MoveOp::BlowDown) => {
                let (plane, _) = blow_down_internal(r, step.drops_smooth_marks)?;
                Pair::Plane(plane)
            }
            (_, op) => {
                return Err(mismatch(format!(
                    "move {op:?} does not apply to the current surface"
                )))
            }
        };
        let actual = match &state {
            Pair::Plane(p) => SurfaceDesc::Plane { degree: p.degree() },
            Pair::Ruled(r) => ruled_desc(r),
        };
        if actual != step.surface_after {
            return Err(mismatch(format!(
                "state {actual:?} diverges from recorded {:?}",
                step.surface_after
            )));
        }
    }
    Ok(state)
}

//! Weighted clusters of infinitely near points.
//!
//! A cluster is a forest: each point is either a proper point of the surface
//! (level 0) or infinitely near an earlier point. Proximity records which
//! exceptional divisors contain a point; a satellite is proximate to two
//! points. Multiplicities are curve multiplicities at the corresponding
//! valuations. This module owns cluster validation, log discrepancies of the
//! pair (surface, c*C), the terminal/canonical trichotomy, and the numeric
//! certificates (Noether-Fano and Jung).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// Identifier of a cluster point.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(String);

impl PointId {
    pub fn new(s: impl Into<String>) -> Self {
        PointId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for PointId {
    fn from(s: &str) -> Self {
        PointId(s.to_string())
    }
}

impl From<String> for PointId {
    fn from(s: String) -> Self {
        PointId(s)
    }
}

/// One valuation of a weighted cluster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPoint {
    pub id: PointId,
    /// Multiplicity of the curve at this valuation. Always >= 1; smooth
    /// (mult 1) entries are admitted.
    pub mult: i64,
    /// The point this one is infinitely near to; absent for level-0 points.
    pub parent: Option<PointId>,
    /// Points whose exceptional divisor contains this point. Contains the
    /// parent when there is one; a second entry makes this a satellite.
    pub proximate_to: BTreeSet<PointId>,
    /// Ruled-surface inputs only: whether a level-0 point lies on the
    /// exceptional section C0.
    pub on_c0: Option<bool>,
}

impl ClusterPoint {
    /// A free level-0 point.
    pub fn free(id: impl Into<PointId>, mult: i64) -> Self {
        ClusterPoint {
            id: id.into(),
            mult,
            parent: None,
            proximate_to: BTreeSet::new(),
            on_c0: None,
        }
    }

    /// A free point infinitely near `parent`.
    pub fn near(id: impl Into<PointId>, mult: i64, parent: impl Into<PointId>) -> Self {
        let parent = parent.into();
        ClusterPoint {
            id: id.into(),
            mult,
            parent: Some(parent.clone()),
            proximate_to: BTreeSet::from([parent]),
            on_c0: None,
        }
    }

    /// A satellite point, proximate to its parent and a strict ancestor of it.
    pub fn satellite(
        id: impl Into<PointId>,
        mult: i64,
        parent: impl Into<PointId>,
        other: impl Into<PointId>,
    ) -> Self {
        let parent = parent.into();
        ClusterPoint {
            id: id.into(),
            mult,
            parent: Some(parent.clone()),
            proximate_to: BTreeSet::from([parent, other.into()]),
            on_c0: None,
        }
    }

    pub fn with_on_c0(mut self, on_c0: bool) -> Self {
        self.on_c0 = Some(on_c0);
        self
    }

    pub fn is_level0(&self) -> bool {
        self.parent.is_none()
    }

    pub fn is_on_c0(&self) -> bool {
        self.on_c0 == Some(true)
    }
}

/// Context a cluster is validated against: flags are only legal on ruled
/// surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterContext {
    Plane,
    Ruled,
}

/// One violated invariant, with the offending point when there is one.
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub id: Option<PointId>,
    pub message: String,
}

/// Outcome of cluster or pair validation. Validation never aborts: every
/// violated invariant is reported.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, id: Option<&PointId>, message: impl Into<String>) {
        self.violations.push(Violation {
            id: id.cloned(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match &v.id {
                Some(id) => write!(f, "{} at {}", v.message, id)?,
                None => f.write_str(&v.message)?,
            }
        }
        Ok(())
    }
}

/// A forest of infinitely near points with multiplicities and proximities.
/// Parents precede children in the point list; ids are unique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedCluster {
    points: Vec<ClusterPoint>,
}

impl WeightedCluster {
    pub fn new(points: Vec<ClusterPoint>) -> Self {
        WeightedCluster { points }
    }

    pub fn empty() -> Self {
        WeightedCluster { points: Vec::new() }
    }

    pub fn points(&self) -> &[ClusterPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, id: &PointId) -> Option<&ClusterPoint> {
        self.points.iter().find(|p| &p.id == id)
    }

    pub fn index_of(&self, id: &PointId) -> Option<usize> {
        self.points.iter().position(|p| &p.id == id)
    }

    pub fn children_of(&self, id: &PointId) -> Vec<&ClusterPoint> {
        self.points
            .iter()
            .filter(|p| p.parent.as_ref() == Some(id))
            .collect()
    }

    /// Points proximate to `id`, i.e. the q with id in proximate_to(q).
    pub fn proximate_points(&self, id: &PointId) -> Vec<&ClusterPoint> {
        self.points
            .iter()
            .filter(|p| p.proximate_to.contains(id))
            .collect()
    }

    /// Excess of the proximity inequality at `id`: mult minus the multiplicity
    /// carried by points proximate to it. Positive excess means the strict
    /// transform of the curve still meets the exceptional divisor of `id`.
    pub fn proximity_excess(&self, id: &PointId) -> i64 {
        let m = self.point(id).map(|p| p.mult).unwrap_or(0);
        m - self
            .proximate_points(id)
            .iter()
            .map(|p| p.mult)
            .sum::<i64>()
    }

    /// Maximal multiplicity, defaulting to 1 for the empty cluster.
    pub fn max_multiplicity_or_one(&self) -> i64 {
        self.points.iter().map(|p| p.mult).max().unwrap_or(1).max(1)
    }

    /// Multiplicities sorted descending.
    pub fn sorted_multiplicities(&self) -> Vec<i64> {
        let mut m: Vec<i64> = self.points.iter().map(|p| p.mult).collect();
        m.sort_unstable_by(|a, b| b.cmp(a));
        m
    }

    /// Sum of delta invariants m(m-1)/2 over the cluster.
    pub fn delta_sum(&self) -> i64 {
        self.points.iter().map(|p| p.mult * (p.mult - 1) / 2).sum()
    }

    pub fn level0_points(&self) -> impl Iterator<Item = &ClusterPoint> {
        self.points.iter().filter(|p| p.is_level0())
    }

    pub fn on_c0_mult_sum(&self) -> i64 {
        self.points
            .iter()
            .filter(|p| p.is_on_c0())
            .map(|p| p.mult)
            .sum()
    }

    /// Indices of the subtree rooted at `root` (inclusive), in list order.
    pub fn subtree_indices(&self, root: &PointId) -> Vec<usize> {
        let mut in_tree: Vec<bool> = vec![false; self.points.len()];
        let mut out = Vec::new();
        for (i, p) in self.points.iter().enumerate() {
            let member = &p.id == root
                || p.parent
                    .as_ref()
                    .and_then(|par| self.index_of(par))
                    .map(|pi| in_tree[pi])
                    .unwrap_or(false);
            if member {
                in_tree[i] = true;
                out.push(i);
            }
        }
        out
    }

    /// A fresh id with the given prefix, not colliding with existing ids.
    pub fn fresh_id(&self, prefix: &str) -> PointId {
        let mut k = 1usize;
        loop {
            let candidate = PointId::new(format!("{prefix}{k}"));
            if self.point(&candidate).is_none() {
                return candidate;
            }
            k += 1;
        }
    }

    pub fn push(&mut self, point: ClusterPoint) {
        self.points.push(point);
    }
}

/// Validate every cluster invariant; collects all violations instead of
/// aborting on the first.
pub fn validate_cluster(cluster: &WeightedCluster, context: ClusterContext) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();

    for (i, p) in cluster.points().iter().enumerate() {
        if p.id.as_str().is_empty() {
            report.push(Some(&p.id), "empty id");
        }
        if let Some(prev) = seen.insert(p.id.as_str(), i) {
            report.push(
                Some(&p.id),
                format!("duplicate id (positions {prev} and {i})"),
            );
        }
        if p.mult < 1 {
            report.push(Some(&p.id), format!("mult {} < 1", p.mult));
        } else if p.mult > MAX_CLASS_VALUE {
            report.push(
                Some(&p.id),
                format!("mult {} exceeds {MAX_CLASS_VALUE}", p.mult),
            );
        }

        match &p.parent {
            Some(parent) => {
                match cluster.index_of(parent) {
                    Some(pi) if pi < i => {}
                    Some(_) => report.push(
                        Some(&p.id),
                        format!("parent {parent} does not precede its child"),
                    ),
                    None => report.push(Some(&p.id), format!("unknown parent {parent}")),
                }
                if !p.proximate_to.contains(parent) {
                    report.push(
                        Some(&p.id),
                        format!("proximate_to must contain the parent {parent}"),
                    );
                }
            }
            None => {
                if !p.proximate_to.is_empty() {
                    report.push(Some(&p.id), "level-0 point with nonempty proximate_to");
                }
            }
        }

        if p.proximate_to.len() > 2 {
            report.push(
                Some(&p.id),
                format!(
                    "proximate_to has {} entries, at most 2 allowed",
                    p.proximate_to.len()
                ),
            );
        } else if p.proximate_to.len() == 2 {
            if let Some(parent) = &p.parent {
                let other = p.proximate_to.iter().find(|q| *q != parent);
                if let Some(other) = other {
                    if !is_strict_ancestor(cluster, other, parent) {
                        report.push(
                            Some(&p.id),
                            format!("satellite target {other} is not a strict ancestor of the parent {parent}"),
                        );
                    }
                }
            }
        }

        match context {
            ClusterContext::Plane => {
                if p.on_c0.is_some() {
                    report.push(Some(&p.id), "on_c0 flag is not allowed on plane input");
                }
            }
            ClusterContext::Ruled => {
                if p.on_c0.is_some() && !p.is_level0() {
                    report.push(Some(&p.id), "on_c0 flag is only allowed on level-0 points");
                }
            }
        }
    }

    // Proximity inequality: mult(p) >= sum of mult(q) over q proximate to p.
    for p in cluster.points() {
        let load: i64 = cluster.proximate_points(&p.id).iter().map(|q| q.mult).sum();
        if p.mult < load {
            report.push(
                Some(&p.id),
                format!("proximity: {} < {} at {}", p.mult, load, p.id),
            );
        }
    }

    report
}

fn is_strict_ancestor(cluster: &WeightedCluster, ancestor: &PointId, of: &PointId) -> bool {
    let mut cur = cluster.point(of).and_then(|p| p.parent.clone());
    while let Some(id) = cur {
        if &id == ancestor {
            return true;
        }
        cur = cluster.point(&id).and_then(|p| p.parent.clone());
    }
    false
}

/// A plane curve of degree d together with its weighted cluster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanePair {
    degree: i64,
    cluster: WeightedCluster,
}

/// Upper bound on degrees and class coefficients; keeps every genus and
/// intersection computation inside 64 bits.
pub const MAX_CLASS_VALUE: i64 = 1_000_000;

impl PlanePair {
    pub fn new(
        degree: i64,
        cluster: WeightedCluster,
    ) -> std::result::Result<Self, ValidationReport> {
        let mut report = validate_cluster(&cluster, ClusterContext::Plane);
        if degree < 1 {
            report.push(None, format!("degree {degree} < 1"));
        }
        if degree > MAX_CLASS_VALUE {
            report.push(None, format!("degree {degree} exceeds {MAX_CLASS_VALUE}"));
        }
        if degree == 1 && !cluster.is_empty() {
            report.push(None, "a line carries an empty cluster");
        }
        if degree >= 2 {
            for p in cluster.points() {
                if p.mult > degree - 1 {
                    report.push(
                        Some(&p.id),
                        format!("mult {} exceeds degree - 1 = {}", p.mult, degree - 1),
                    );
                }
            }
        }
        let pair = PlanePair { degree, cluster };
        if report.is_valid() && pair.genus_i64() < 0 {
            report.push(
                None,
                format!("combinatorial genus {} < 0", pair.genus_i64()),
            );
        }
        if report.is_valid() {
            Ok(pair)
        } else {
            Err(report)
        }
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn cluster(&self) -> &WeightedCluster {
        &self.cluster
    }

    fn genus_i64(&self) -> i64 {
        (self.degree - 1) * (self.degree - 2) / 2 - self.cluster.delta_sum()
    }

    /// Combinatorial genus (d-1)(d-2)/2 - sum m_i(m_i-1)/2.
    pub fn combinatorial_genus(&self) -> BigRational {
        BigRational::from(BigInt::from(self.genus_i64()))
    }

    pub fn max_multiplicity_or_one(&self) -> i64 {
        self.cluster.max_multiplicity_or_one()
    }
}

/// Where a discrepancy minimum is attained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "id")]
pub enum DiscrepancyWitness {
    /// A cluster point.
    Point(PointId),
    /// A virtual mult-1 point where the strict transform leaves the named
    /// exceptional divisor.
    Saturation(PointId),
    /// A general smooth point of the curve.
    GenericCurvePoint,
}

/// Log discrepancies of a pair, entry by entry, with the saturated minimum.
#[derive(Clone, Debug, Serialize)]
pub struct DiscrepancyReport {
    #[serde(serialize_with = "crate::ser_rational")]
    pub coefficient: BigRational,
    #[serde(serialize_with = "crate::ser_entry_list")]
    pub entries: Vec<(PointId, BigRational)>,
    #[serde(serialize_with = "crate::ser_rational")]
    pub minimum: BigRational,
    pub witness: DiscrepancyWitness,
}

impl DiscrepancyReport {
    pub fn entry(&self, id: &PointId) -> Option<&BigRational> {
        self.entries.iter().find(|(p, _)| p == id).map(|(_, a)| a)
    }
}

fn check_coefficient(c: &BigRational) -> Result<()> {
    if c <= &BigRational::zero() || c > &BigRational::one() {
        return Err(EngineError::CoefficientOutOfRange(rational_string(c)));
    }
    Ok(())
}

/// Discrepancy entries a_i = 1 + sum of a_j over j in proximate_to(i) - c*m_i,
/// computed in forest order.
fn discrepancy_entries(cluster: &WeightedCluster, c: &BigRational) -> Vec<(PointId, BigRational)> {
    let mut values: BTreeMap<PointId, BigRational> = BTreeMap::new();
    let mut out = Vec::with_capacity(cluster.len());
    for p in cluster.points() {
        let mut a = BigRational::one();
        for q in &p.proximate_to {
            if let Some(v) = values.get(q) {
                a += v.clone();
            }
        }
        a -= c * BigRational::from(BigInt::from(p.mult));
        values.insert(p.id.clone(), a.clone());
        out.push((p.id.clone(), a));
    }
    out
}

/// Saturation values: one virtual mult-1 blowup wherever the strict transform
/// still meets an exceptional divisor (positive proximity excess), plus the
/// generic smooth curve point. Deeper virtual towers add 1 - c >= 0 per level,
/// so the first level realizes the saturated minimum; the depth loop below
/// keeps the cap of twice the cluster size plus three as a stability guard.
fn saturation_values(
    cluster: &WeightedCluster,
    entries: &[(PointId, BigRational)],
    c: &BigRational,
) -> Vec<(DiscrepancyWitness, BigRational)> {
    let step = BigRational::one() - c.clone();
    let mut out = Vec::new();
    for (id, a) in entries {
        if cluster.proximity_excess(id) > 0 {
            out.push((DiscrepancyWitness::Saturation(id.clone()), a + step.clone()));
        }
    }
    out.push((DiscrepancyWitness::GenericCurvePoint, step.clone()));

    let cap = 2 * cluster.len() + 3;
    let mut frontier: Vec<(DiscrepancyWitness, BigRational)> = out.clone();
    for _ in 0..cap {
        let current_min = out
            .iter()
            .map(|(_, v)| v)
            .min()
            .cloned()
            .unwrap_or_else(BigRational::zero);
        let next: Vec<(DiscrepancyWitness, BigRational)> = frontier
            .iter()
            .map(|(w, v)| (w.clone(), v + step.clone()))
            .filter(|(_, v)| *v < current_min)
            .collect();
        if next.is_empty() {
            break;
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Log discrepancies of the pair with boundary c times the curve. Requires
/// 0 < c <= 1.
pub fn log_discrepancies(cluster: &WeightedCluster, c: &BigRational) -> Result<DiscrepancyReport> {
    check_coefficient(c)?;
    let entries = discrepancy_entries(cluster, c);
    let saturations = saturation_values(cluster, &entries, c);

    let mut minimum: Option<(DiscrepancyWitness, BigRational)> = None;
    for (id, a) in &entries {
        if minimum.as_ref().map(|(_, m)| a < m).unwrap_or(true) {
            minimum = Some((DiscrepancyWitness::Point(id.clone()), a.clone()));
        }
    }
    for (w, v) in &saturations {
        if minimum.as_ref().map(|(_, m)| v < m).unwrap_or(true) {
            minimum = Some((w.clone(), v.clone()));
        }
    }
    let (witness, minimum) = minimum.expect("generic curve point always present");

    Ok(DiscrepancyReport {
        coefficient: c.clone(),
        entries,
        minimum,
        witness,
    })
}

/// The terminal/canonical trichotomy of a pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum SingularityClass {
    NonCanonical,
    Canonical,
    Terminal,
}

impl fmt::Display for SingularityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularityClass::Terminal => f.write_str("Terminal"),
            SingularityClass::Canonical => f.write_str("Canonical"),
            SingularityClass::NonCanonical => f.write_str("NonCanonical"),
        }
    }
}

/// Which valuations the classification minimum ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassificationScope {
    /// All valuations over the surface.
    Global,
    /// Only valuations centered on the exceptional section C0 (ruled input):
    /// the subtrees of on-C0 level-0 points and their saturations.
    AlongC0,
}

/// Result of [`classify_singularities`].
#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub class: SingularityClass,
    /// None when the scope contains no valuation at all (vacuously terminal).
    #[serde(serialize_with = "crate::ser_opt_rational")]
    pub minimum: Option<BigRational>,
    pub witness: Option<DiscrepancyWitness>,
}

/// Classify the pair (surface, c*C): Terminal iff the discrepancy minimum is
/// positive, Canonical iff it is zero, NonCanonical otherwise. With scope
/// [`ClassificationScope::AlongC0`] the minimum is restricted to valuations
/// centered on C0 ("terminal along C0").
pub fn classify_singularities(
    cluster: &WeightedCluster,
    c: &BigRational,
    scope: ClassificationScope,
) -> Result<Classification> {
    check_coefficient(c)?;
    let entries = discrepancy_entries(cluster, c);

    let in_scope: Vec<bool> = match scope {
        ClassificationScope::Global => vec![true; cluster.len()],
        ClassificationScope::AlongC0 => {
            let mut flags = vec![false; cluster.len()];
            for (i, p) in cluster.points().iter().enumerate() {
                flags[i] = match &p.parent {
                    None => p.is_on_c0(),
                    Some(parent) => cluster
                        .index_of(parent)
                        .map(|pi| flags[pi])
                        .unwrap_or(false),
                };
            }
            flags
        }
    };

    let mut minimum: Option<(DiscrepancyWitness, BigRational)> = None;
    let mut consider = |w: DiscrepancyWitness, v: BigRational| {
        if minimum.as_ref().map(|(_, m)| &v < m).unwrap_or(true) {
            minimum = Some((w, v));
        }
    };

    for (i, (id, a)) in entries.iter().enumerate() {
        if in_scope[i] {
            consider(DiscrepancyWitness::Point(id.clone()), a.clone());
        }
    }
    let step = BigRational::one() - c.clone();
    for (i, (id, a)) in entries.iter().enumerate() {
        if in_scope[i] && cluster.proximity_excess(id) > 0 {
            consider(DiscrepancyWitness::Saturation(id.clone()), a + step.clone());
        }
    }
    if scope == ClassificationScope::Global {
        consider(DiscrepancyWitness::GenericCurvePoint, step);
    }

    let (witness, minimum) = match minimum {
        Some((w, m)) => (Some(w), Some(m)),
        None => (None, None),
    };
    let class = match &minimum {
        None => SingularityClass::Terminal,
        Some(m) if m.is_positive() => SingularityClass::Terminal,
        Some(m) if m.is_zero() => SingularityClass::Canonical,
        Some(_) => SingularityClass::NonCanonical,
    };
    Ok(Classification {
        class,
        minimum,
        witness,
    })
}

/// Kind of a numeric inequivalence/minimality certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertificateKind {
    NoetherFano,
    Jung,
}

/// A certificate instantiated with input numbers. `holds` is true exactly
/// when `lhs <= rhs` in exact rational arithmetic.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub holds: bool,
    #[serde(serialize_with = "crate::ser_rational")]
    pub lhs: BigRational,
    #[serde(serialize_with = "crate::ser_rational")]
    pub rhs: BigRational,
    pub statement: String,
}

fn int_rat(n: i64) -> BigRational {
    BigRational::from(BigInt::from(n))
}

/// Noether-Fano certificate for embeddings in P^n of degrees d_high > d_low:
/// holds iff max_mult * (n + 1) <= d_high, in which case the two embeddings
/// are not Cremona equivalent.
pub fn noether_fano_certificate(
    n: i64,
    d_high: i64,
    d_low: i64,
    max_mult: i64,
) -> Result<Certificate> {
    if n < 2 {
        return Err(EngineError::Precondition(format!(
            "ambient dimension n = {n} must be at least 2"
        )));
    }
    if d_low < 1 {
        return Err(EngineError::Precondition(format!(
            "d_low = {d_low} must be at least 1"
        )));
    }
    if d_high <= d_low {
        return Err(EngineError::Precondition(format!(
            "d_high = {d_high} must exceed d_low = {d_low} (the lemma hypothesis l > g fails)"
        )));
    }
    if max_mult < 0 {
        return Err(EngineError::Precondition(format!(
            "max_mult = {max_mult} must be non-negative"
        )));
    }
    let lhs = int_rat(max_mult * (n + 1));
    let rhs = int_rat(d_high);
    let holds = lhs <= rhs;
    let statement = format!(
        "max_mult*(n+1) = {}*{} = {} {} {} = d_high: degree-{} and degree-{} embeddings in P^{} are {}",
        max_mult,
        n + 1,
        max_mult * (n + 1),
        if holds { "<=" } else { ">" },
        d_high,
        d_high,
        d_low,
        n,
        if holds {
            "not Cremona equivalent"
        } else {
            "not separated by this bound"
        },
    );
    Ok(Certificate {
        kind: CertificateKind::NoetherFano,
        holds,
        lhs,
        rhs,
        statement,
    })
}

/// Plane overload of the Noether-Fano certificate: certifies via the
/// classification of (P^2, 3/d * C), which is strictly stronger than the raw
/// multiplicity bound. Holds iff that pair has canonical singularities.
pub fn noether_fano_plane_certificate(pair: &PlanePair, d_low: i64) -> Result<Certificate> {
    let d = pair.degree();
    if d_low < 1 || d <= d_low {
        return Err(EngineError::Precondition(format!(
            "need degree {d} > d_low = {d_low} >= 1"
        )));
    }
    let c = BigRational::new(BigInt::from(3), BigInt::from(d));
    let classification = classify_singularities(pair.cluster(), &c, ClassificationScope::Global)?;
    let minimum = classification
        .minimum
        .clone()
        .expect("global scope always has the generic curve point");
    let holds = !minimum.is_negative();
    let statement = format!(
        "(P^2, 3/{} C) has discrepancy minimum {} ({}): degree-{} curve is {} of lower degree down to {}",
        d,
        rational_string(&minimum),
        classification.class,
        d,
        if holds {
            "not Cremona equivalent to any curve"
        } else {
            "not separated by canonicity from curves"
        },
        d_low,
    );
    Ok(Certificate {
        kind: CertificateKind::NoetherFano,
        holds,
        lhs: BigRational::zero(),
        rhs: minimum,
        statement,
    })
}

/// Jung's criterion: m1 + m2 + m3 <= d certifies minimal degree. Missing
/// multiplicities read as 1.
pub fn jung_test(pair: &PlanePair) -> Certificate {
    let mut mults = pair.cluster().sorted_multiplicities();
    while mults.len() < 3 {
        mults.push(1);
    }
    let top: i64 = mults[..3].iter().sum();
    let d = pair.degree();
    let holds = top <= d;
    Certificate {
        kind: CertificateKind::Jung,
        holds,
        lhs: int_rat(top),
        rhs: int_rat(d),
        statement: format!(
            "m1+m2+m3 = {}+{}+{} = {} {} {} = d{}",
            mults[0],
            mults[1],
            mults[2],
            top,
            if holds { "<=" } else { ">" },
            d,
            if holds { ": minimal degree" } else { "" },
        ),
    }
}

/// "p/q" rendering used across reports; exact, never floating point.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse "p/q" or a bare integer as an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| EngineError::Precondition(format!("not an integer: {t:?}")))
    };
    match s.split_once('/') {
        Some((p, q)) => {
            let num = parse_int(p)?;
            let den = parse_int(q)?;
            if den.is_zero() {
                return Err(EngineError::Precondition("zero denominator".into()));
            }
            Ok(BigRational::new(num, den))
        }
        None => Ok(BigRational::from(parse_int(s)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn node() -> WeightedCluster {
        WeightedCluster::new(vec![ClusterPoint::free("p1", 2)])
    }

    fn tacnode() -> WeightedCluster {
        WeightedCluster::new(vec![
            ClusterPoint::free("p1", 2),
            ClusterPoint::near("p2", 2, "p1"),
        ])
    }

    fn node_plus_tacnode_sextic() -> PlanePair {
        PlanePair::new(
            6,
            WeightedCluster::new(vec![
                ClusterPoint::free("n", 2),
                ClusterPoint::free("t1", 2),
                ClusterPoint::near("t2", 2, "t1"),
            ]),
        )
        .unwrap()
    }

    #[test]
    fn single_free_point_is_valid() {
        assert!(validate_cluster(&node(), ClusterContext::Plane).is_valid());
    }

    #[test]
    fn tacnode_proximity_equality_is_valid() {
        assert!(validate_cluster(&tacnode(), ClusterContext::Plane).is_valid());
    }

    #[test]
    fn proximity_violation_is_reported() {
        let cluster = WeightedCluster::new(vec![
            ClusterPoint::free("p1", 2),
            ClusterPoint::near("p2", 3, "p1"),
        ]);
        let report = validate_cluster(&cluster, ClusterContext::Plane);
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| v.message.contains("proximity: 2 < 3")));
    }

    #[test]
    fn satellite_needs_strict_ancestor_of_parent() {
        let bad = WeightedCluster::new(vec![
            ClusterPoint::free("a", 3),
            ClusterPoint::free("b", 3),
            ClusterPoint::satellite("s", 1, "a", "b"),
        ]);
        let report = validate_cluster(&bad, ClusterContext::Plane);
        assert!(!report.is_valid());

        let good = WeightedCluster::new(vec![
            ClusterPoint::free("a", 3),
            ClusterPoint::near("b", 2, "a"),
            ClusterPoint::satellite("s", 1, "b", "a"),
        ]);
        assert!(validate_cluster(&good, ClusterContext::Plane).is_valid());
    }

    #[test]
    fn on_c0_flag_rejected_on_plane_and_deep_points() {
        let cluster = WeightedCluster::new(vec![ClusterPoint::free("p", 2).with_on_c0(true)]);
        assert!(!validate_cluster(&cluster, ClusterContext::Plane).is_valid());
        assert!(validate_cluster(&cluster, ClusterContext::Ruled).is_valid());

        let deep = WeightedCluster::new(vec![
            ClusterPoint::free("p", 2),
            ClusterPoint::near("q", 1, "p").with_on_c0(false),
        ]);
        assert!(!validate_cluster(&deep, ClusterContext::Ruled).is_valid());
    }

    #[test]
    fn nodal_cubic_is_rational() {
        let pair = PlanePair::new(3, node()).unwrap();
        assert_eq!(pair.combinatorial_genus(), rat(0, 1));
    }

    #[test]
    fn sextic_node_tacnode_genus_seven() {
        assert_eq!(node_plus_tacnode_sextic().combinatorial_genus(), rat(7, 1));
    }

    #[test]
    fn genus_cannot_go_negative() {
        let err = PlanePair::new(
            3,
            WeightedCluster::new(vec![ClusterPoint::free("a", 2), ClusterPoint::free("b", 2)]),
        );
        assert!(err.is_err());
    }

    #[test]
    fn node_discrepancy_at_one_half() {
        let report = log_discrepancies(&node(), &rat(1, 2)).unwrap();
        assert_eq!(report.entry(&"p1".into()).unwrap(), &rat(0, 1));
    }

    #[test]
    fn tacnode_chain_discrepancies() {
        let report = log_discrepancies(&tacnode(), &rat(1, 2)).unwrap();
        assert_eq!(report.entry(&"p1".into()).unwrap(), &rat(0, 1));
        assert_eq!(report.entry(&"p2".into()).unwrap(), &rat(0, 1));
        assert_eq!(report.minimum, rat(0, 1));
    }

    #[test]
    fn mult_four_point_at_three_sevenths() {
        let cluster = WeightedCluster::new(vec![ClusterPoint::free("p", 4)]);
        let report = log_discrepancies(&cluster, &rat(3, 7)).unwrap();
        assert_eq!(report.entry(&"p".into()).unwrap(), &rat(-5, 7));
        assert_eq!(report.minimum, rat(-5, 7));
        assert_eq!(report.witness, DiscrepancyWitness::Point("p".into()));
    }

    #[test]
    fn coefficient_range_is_enforced() {
        assert!(log_discrepancies(&node(), &rat(0, 1)).is_err());
        assert!(log_discrepancies(&node(), &rat(3, 2)).is_err());
        assert!(log_discrepancies(&node(), &rat(-1, 2)).is_err());
        assert!(log_discrepancies(&node(), &rat(1, 1)).is_ok());
    }

    #[test]
    fn classify_sextic_canonical_with_witness_first_point() {
        let pair = node_plus_tacnode_sextic();
        let c = classify_singularities(pair.cluster(), &rat(1, 2), ClassificationScope::Global)
            .unwrap();
        assert_eq!(c.class, SingularityClass::Canonical);
        assert_eq!(c.witness, Some(DiscrepancyWitness::Point("n".into())));
    }

    #[test]
    fn classify_single_node_of_degree_seven_terminal() {
        let cluster = node();
        let c = classify_singularities(&cluster, &rat(3, 7), ClassificationScope::Global).unwrap();
        assert_eq!(c.class, SingularityClass::Terminal);
    }

    #[test]
    fn classify_node_at_a_third_of_degree_not_terminal() {
        // m1 = 2 = d/3 for d = 6: the pair (P^2, 3/6 C) is not terminal.
        let cluster = node();
        let c = classify_singularities(&cluster, &rat(3, 6), ClassificationScope::Global).unwrap();
        assert_ne!(c.class, SingularityClass::Terminal);
        assert_eq!(c.class, SingularityClass::Canonical);
    }

    #[test]
    fn empty_cluster_at_coefficient_one_is_canonical_not_terminal() {
        let c = classify_singularities(
            &WeightedCluster::empty(),
            &rat(1, 1),
            ClassificationScope::Global,
        )
        .unwrap();
        assert_eq!(c.class, SingularityClass::Canonical);
        assert_eq!(c.witness, Some(DiscrepancyWitness::GenericCurvePoint));
    }

    #[test]
    fn along_c0_scope_restricts_to_flagged_subtrees() {
        let cluster = WeightedCluster::new(vec![
            ClusterPoint::free("on", 2).with_on_c0(true),
            ClusterPoint::free("off", 3).with_on_c0(false),
        ]);
        // c = 1/2: a(on) = 0, a(off) = -1/2. Globally non-canonical, but along
        // C0 only the on-C0 point counts: minimum 0, not terminal.
        let global =
            classify_singularities(&cluster, &rat(1, 2), ClassificationScope::Global).unwrap();
        assert_eq!(global.class, SingularityClass::NonCanonical);
        let along =
            classify_singularities(&cluster, &rat(1, 2), ClassificationScope::AlongC0).unwrap();
        assert_eq!(along.class, SingularityClass::Canonical);
        assert_eq!(along.witness, Some(DiscrepancyWitness::Point("on".into())));

        let none = WeightedCluster::new(vec![ClusterPoint::free("off", 3).with_on_c0(false)]);
        let vac = classify_singularities(&none, &rat(1, 2), ClassificationScope::AlongC0).unwrap();
        assert_eq!(vac.class, SingularityClass::Terminal);
        assert!(vac.minimum.is_none());
    }

    #[test]
    fn noether_fano_certificates() {
        let c = noether_fano_certificate(3, 8, 7, 2).unwrap();
        assert!(c.holds);
        let c = noether_fano_certificate(2, 7, 6, 2).unwrap();
        assert!(c.holds);
        let c = noether_fano_certificate(2, 6, 5, 3).unwrap();
        assert!(!c.holds);
        assert!(noether_fano_certificate(3, 7, 7, 2).is_err());
        assert!(noether_fano_certificate(1, 8, 7, 2).is_err());
    }

    #[test]
    fn noether_fano_plane_overload_via_classification() {
        // d = 7 with a single node: terminal at 3/7, certificate holds.
        let pair = PlanePair::new(7, node()).unwrap();
        let cert = noether_fano_plane_certificate(&pair, 6).unwrap();
        assert!(cert.holds);
        // d = 6 with a mult-3 point: 1 - 3*3/6 < 0, no certificate.
        let pair =
            PlanePair::new(6, WeightedCluster::new(vec![ClusterPoint::free("t", 3)])).unwrap();
        let cert = noether_fano_plane_certificate(&pair, 5).unwrap();
        assert!(!cert.holds);
    }

    #[test]
    fn jung_examples() {
        let sextic = PlanePair::new(
            6,
            WeightedCluster::new(vec![
                ClusterPoint::free("a", 2),
                ClusterPoint::free("b", 2),
                ClusterPoint::free("c", 2),
            ]),
        )
        .unwrap();
        assert!(jung_test(&sextic).holds);

        // Degree 9 with a six-tuple point and three infinitely near doubles.
        let nine = PlanePair::new(
            9,
            WeightedCluster::new(vec![
                ClusterPoint::free("p", 6),
                ClusterPoint::near("q1", 2, "p"),
                ClusterPoint::near("q2", 2, "p"),
                ClusterPoint::near("q3", 2, "p"),
            ]),
        )
        .unwrap();
        let cert = jung_test(&nine);
        assert!(!cert.holds);
        assert_eq!(cert.lhs, rat(10, 1));

        let seven = PlanePair::new(
            7,
            WeightedCluster::new(vec![
                ClusterPoint::free("p", 4),
                ClusterPoint::near("q1", 2, "p"),
                ClusterPoint::near("q2", 2, "p"),
            ]),
        )
        .unwrap();
        assert!(!jung_test(&seven).holds);
    }

    #[test]
    fn discrepancies_strictly_decrease_in_coefficient() {
        let cluster = WeightedCluster::new(vec![
            ClusterPoint::free("a", 3),
            ClusterPoint::near("b", 2, "a"),
            ClusterPoint::satellite("s", 1, "b", "a"),
        ]);
        let lo = log_discrepancies(&cluster, &rat(1, 3)).unwrap();
        let hi = log_discrepancies(&cluster, &rat(2, 3)).unwrap();
        for ((_, a_lo), (_, a_hi)) in lo.entries.iter().zip(hi.entries.iter()) {
            assert!(a_hi < a_lo);
        }
        assert!(hi.minimum < lo.minimum);
    }

    #[test]
    fn oversized_values_are_rejected() {
        let err = PlanePair::new(MAX_CLASS_VALUE + 1, WeightedCluster::empty());
        assert!(err.is_err());
        let cluster = WeightedCluster::new(vec![ClusterPoint::free("p", MAX_CLASS_VALUE + 1)]);
        assert!(!validate_cluster(&cluster, ClusterContext::Plane).is_valid());
    }

    #[test]
    fn rational_round_trip() {
        assert_eq!(parse_rational("3/7").unwrap(), rat(3, 7));
        assert_eq!(parse_rational("-5").unwrap(), rat(-5, 1));
        assert_eq!(rational_string(&rat(-5, 7)), "-5/7");
        assert!(parse_rational("1/0").is_err());
    }
}

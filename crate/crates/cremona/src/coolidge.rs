//! Cremona equivalence to a line for rational plane curves: the Kumar-Murthy
//! emptiness test on |2K + C| and the log MMP of the pair (S, C/2) on the
//! cluster resolution. Both positive verdicts are sound; when neither
//! certificate applies the answer degrades to Undetermined instead of
//! guessing.

use serde::Serialize;
use std::collections::BTreeSet;

use num_traits::Zero;

use crate::cluster::{PlanePair, PointId};
use crate::error::{EngineError, Result};
use crate::lattice::{BlowupSurface, DivisorClass};

/// Search bounds for candidate classes and auxiliary blow-ups.
#[derive(Clone, Copy, Debug)]
pub struct CoolidgeConfig {
    /// Largest e0-degree searched for contractible classes.
    pub max_class_degree: i64,
    /// Auxiliary blow-ups at smooth curve points allowed during the MMP.
    pub aux_blowups: usize,
}

impl Default for CoolidgeConfig {
    fn default() -> Self {
        CoolidgeConfig {
            max_class_degree: 6,
            aux_blowups: 8,
        }
    }
}

/// One point of the cluster resolution lattice.
#[derive(Clone, Debug, Serialize)]
pub struct ModelPoint {
    pub id: PointId,
    pub mult: i64,
    /// Indices of the points this one is proximate to.
    pub prox: Vec<usize>,
    /// Whether the point is a satellite (proximate to two points).
    pub satellite: bool,
    /// Auxiliary smooth curve point added during the MMP.
    pub synthetic: bool,
}

/// The minimal resolution of a rational plane pair inside its Picard lattice:
/// basis e0, e1, ..., en, curve class d e0 - sum m_i e_i, canonical
/// -3 e0 + sum e_i, proximities carried over from the cluster.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupModel {
    pub surface: BlowupSurface,
    pub curve_class: DivisorClass,
    pub points: Vec<ModelPoint>,
}

impl BlowupModel {
    /// Strict transform of the exceptional divisor over point `i`:
    /// e_{i+1} minus the e-classes of the points proximate to it.
    pub fn strict_exceptional(&self, i: usize) -> DivisorClass {
        let dim = self.surface.rank();
        let mut class = DivisorClass::basis(i + 1, dim);
        for (j, p) in self.points.iter().enumerate() {
            if p.prox.contains(&i) {
                class = class.sub(&DivisorClass::basis(j + 1, dim));
            }
        }
        class
    }
}

/// Blow up the full cluster of a rational pair. Errors when the
/// combinatorial genus is not zero: the line-equivalence criteria only apply
/// to rational curves.
pub fn resolve_to_lattice(pair: &PlanePair) -> Result<BlowupModel> {
    let genus = pair.combinatorial_genus();
    if !genus.is_zero() {
        return Err(EngineError::NotRational(genus.to_string()));
    }
    let cluster = pair.cluster();
    let mut surface = BlowupSurface::projective_plane();
    for p in cluster.points() {
        surface = surface.blow_up(&format!("e:{}", p.id))?;
    }
    let n = cluster.len();
    let mut curve = vec![0i64; n + 1];
    curve[0] = pair.degree();
    for (i, p) in cluster.points().iter().enumerate() {
        curve[i + 1] = -p.mult;
    }
    let points = cluster
        .points()
        .iter()
        .map(|p| {
            let prox: Vec<usize> = p
                .proximate_to
                .iter()
                .filter_map(|q| cluster.index_of(q))
                .collect();
            ModelPoint {
                id: p.id.clone(),
                mult: p.mult,
                satellite: prox.len() >= 2,
                prox,
                synthetic: false,
            }
        })
        .collect();
    Ok(BlowupModel {
        surface,
        curve_class: DivisorClass::new(curve),
        points,
    })
}

/// Multiplicity view of a class (delta; mu_1..mu_n): mu_i = -coeff(i+1).
fn mu(class: &DivisorClass, i: usize) -> i64 {
    -class.coeff(i + 1)
}

fn set_mu(class: &mut [i64], i: usize, value: i64) {
    class[i + 1] = -value;
}

/// Classical unloading: while some point carries less multiplicity than the
/// points proximate to it, shift one unit from them to it
/// (D -> D - strict_exceptional). Terminates at the proximity-consistent
/// representative of the same linear system.
pub fn unloading(class: &DivisorClass, prox: &[Vec<usize>]) -> Result<DivisorClass> {
    let n = prox.len();
    if class.dim() != n + 1 {
        return Err(EngineError::DimensionMismatch {
            class: class.dim(),
            rank: n + 1,
        });
    }
    let mut coeffs = class.coeffs().to_vec();
    let weight: i64 = coeffs.iter().map(|c| c.abs()).sum::<i64>() + 2;
    let cap = 1000 * (n as i64 + 2) * weight;
    let mut steps = 0i64;
    loop {
        let mut fired = false;
        for i in 0..n {
            let load: i64 = (0..n)
                .filter(|&j| prox[j].contains(&i))
                .map(|j| -coeffs[j + 1])
                .sum();
            let mu_i = -coeffs[i + 1];
            if mu_i < load {
                // parent gains one unit, each proximate point loses one
                set_mu(&mut coeffs, i, mu_i + 1);
                for j in 0..n {
                    if prox[j].contains(&i) {
                        let m = -coeffs[j + 1];
                        set_mu(&mut coeffs, j, m - 1);
                    }
                }
                fired = true;
                break;
            }
        }
        if !fired {
            return Ok(DivisorClass::new(coeffs));
        }
        steps += 1;
        if steps > cap {
            return Err(EngineError::Internal(
                "unloading exceeded its step bound".into(),
            ));
        }
    }
}

/// Outcome of the Kumar-Murthy emptiness test on |2K + C|.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KmOutcome {
    Empty,
    NonEmpty,
    Unknown,
}

/// An explicit non-negative decomposition witnessing effectivity: so many
/// lines plus total transforms of exceptional divisors.
#[derive(Clone, Debug, Serialize)]
pub struct EffectiveDecomposition {
    pub line_coefficient: i64,
    pub exceptional: Vec<(String, i64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KmReport {
    pub outcome: KmOutcome,
    pub steps: Vec<String>,
    pub decomposition: Option<EffectiveDecomposition>,
    pub assumptions: Vec<String>,
}

/// Working point of the Kumar-Murthy reduction.
#[derive(Clone, Debug)]
struct KmPoint {
    label: String,
    mu: i64,
    level0: bool,
    has_children: bool,
    prox: Vec<usize>,
}

/// Kumar-Murthy test: form 2K + C = ((d - 6); m_i - 2), unload, apply
/// h0-preserving quadratic reductions at triples of free level-0 points
/// (general position assumed, padding with generic points of multiplicity 0)
/// while the Noether inequality holds. Degree below zero is a sound Empty;
/// a reduced class with no positive multiplicity is a sound NonEmpty.
pub fn km_empty_test(pair: &PlanePair) -> Result<KmReport> {
    let genus = pair.combinatorial_genus();
    if !genus.is_zero() {
        return Err(EngineError::NotRational(genus.to_string()));
    }
    let cluster = pair.cluster();
    let mut delta = pair.degree() - 6;
    let mut points: Vec<KmPoint> = cluster
        .points()
        .iter()
        .map(|p| KmPoint {
            label: p.id.to_string(),
            mu: p.mult - 2,
            level0: p.is_level0(),
            has_children: !cluster.children_of(&p.id).is_empty(),
            prox: p
                .proximate_to
                .iter()
                .filter_map(|q| cluster.index_of(q))
                .collect(),
        })
        .collect();
    let mut steps = vec![format!(
        "2K + C = ({}; {})",
        delta,
        points
            .iter()
            .map(|p| p.mu.to_string())
            .collect::<Vec<_>>()
            .join(",")
    )];
    let mut assumptions = Vec::new();
    let mut pads = 0usize;

    let report = |outcome: KmOutcome,
                  steps: Vec<String>,
                  decomposition: Option<EffectiveDecomposition>,
                  assumptions: Vec<String>| {
        Ok(KmReport {
            outcome,
            steps,
            decomposition,
            assumptions,
        })
    };

    loop {
        // Unload to the proximity-consistent representative.
        let prox: Vec<Vec<usize>> = points.iter().map(|p| p.prox.clone()).collect();
        let mut coeffs = vec![delta];
        coeffs.extend(points.iter().map(|p| -p.mu));
        let unloaded = unloading(&DivisorClass::new(coeffs.clone()), &prox)?;
        if unloaded.coeffs() != coeffs.as_slice() {
            for (i, p) in points.iter_mut().enumerate() {
                p.mu = mu(&unloaded, i);
            }
            steps.push(format!(
                "unloaded to ({}; {})",
                delta,
                points
                    .iter()
                    .map(|p| p.mu.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            ));
        }

        if delta < 0 {
            steps.push(format!("degree {delta} < 0: system empty"));
            return report(KmOutcome::Empty, steps, None, assumptions);
        }

        // Base triple: the three largest conditions at free level-0 points
        // without tracked nesting, padded with generic points.
        let mut base: Vec<(Option<usize>, i64)> = points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.level0 && !p.has_children)
            .map(|(i, p)| (Some(i), p.mu))
            .collect();
        base.sort_by_key(|&(_, m)| std::cmp::Reverse(m));
        base.truncate(3);
        while base.len() < 3 {
            base.push((None, 0));
        }
        let total: i64 = base.iter().map(|(_, m)| m).sum();
        if total <= delta {
            break;
        }

        // Quadratic map based at the triple: degree 2*delta - total, each
        // base multiplicity mu -> delta - (total - mu).
        assumptions.push(format!(
            "quadratic reduction assumes general position of {}",
            base.iter()
                .map(|(i, _)| match i {
                    Some(i) => points[*i].label.clone(),
                    None => "a generic point".to_string(),
                })
                .collect::<Vec<_>>()
                .join(", ")
        ));
        let new_delta = 2 * delta - total;
        for (slot, m) in &base {
            let new_mu = delta - (total - m);
            match slot {
                Some(i) => points[*i].mu = new_mu,
                None => {
                    if new_mu != 0 {
                        pads += 1;
                        points.push(KmPoint {
                            label: format!("g{pads}"),
                            mu: new_mu,
                            level0: true,
                            has_children: false,
                            prox: Vec::new(),
                        });
                    }
                }
            }
        }
        delta = new_delta;
        steps.push(format!(
            "quadratic reduction to ({}; {})",
            delta,
            points
                .iter()
                .map(|p| p.mu.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
    }

    if points.iter().all(|p| p.mu <= 0) {
        let decomposition = EffectiveDecomposition {
            line_coefficient: delta,
            exceptional: points
                .iter()
                .filter(|p| p.mu < 0)
                .map(|p| (p.label.clone(), -p.mu))
                .collect(),
        };
        steps.push(format!(
            "effective: {} line(s) plus exceptional multiples",
            delta
        ));
        return report(KmOutcome::NonEmpty, steps, Some(decomposition), assumptions);
    }
    steps.push("no certificate: positive conditions remain".into());
    report(KmOutcome::Unknown, steps, None, assumptions)
}

/// Kind of a contraction candidate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CandidateKind {
    ClusterEnd,
    Line,
    Conic,
    SearchFound,
}

/// A (-1)-class candidate for contraction.
#[derive(Clone, Debug, Serialize)]
pub struct CandidateClass {
    pub class: DivisorClass,
    pub kind: CandidateKind,
    /// Proximity-compatible with free-chain support; only admissible
    /// candidates are contracted.
    pub admissible: bool,
    pub curve_pairing: i64,
}

/// Enumerate contractible classes: strict transforms of cluster ends, plus
/// solutions of delta^2 - sum mu^2 = -1, 3 delta - sum mu = 1 with
/// non-negative proximity-admissible multiplicities up to the degree bound.
/// Everything is filtered by curve_class . E <= 1.
pub fn find_contractible(model: &BlowupModel, max_degree: i64) -> Result<Vec<CandidateClass>> {
    candidates_on(model, &model.surface, &model.curve_class, max_degree)
}

fn candidates_on(
    model: &BlowupModel,
    surface: &BlowupSurface,
    curve: &DivisorClass,
    max_degree: i64,
) -> Result<Vec<CandidateClass>> {
    let n = model.points.len();
    let k = surface.canonical().clone();
    let mut out: Vec<CandidateClass> = Vec::new();

    let mut push = |class: DivisorClass, kind: CandidateKind, admissible: bool| -> Result<()> {
        let self_int = surface.intersect(&class, &class)?;
        let k_e = surface.intersect(&k, &class)?;
        if self_int != -1 || k_e != -1 {
            return Ok(());
        }
        let curve_pairing = surface.intersect(curve, &class)?;
        if curve_pairing > 1 {
            return Ok(());
        }
        out.push(CandidateClass {
            class,
            kind,
            admissible,
            curve_pairing,
        });
        Ok(())
    };

    // Cluster ends: strict transforms of the exceptional divisors; only the
    // ends of chains pass the (-1) conditions.
    for i in 0..n {
        let class = model.strict_exceptional(i);
        push(class, CandidateKind::ClusterEnd, true)?;
    }

    // Diophantine search in the plane basis. The Gram matrix here is always
    // diag(1, -1, ..., -1), so pairings against the projected curve and
    // canonical vectors linearize over (delta; mu) and prune the walk.
    // Walking the positions in decreasing curve weight makes the interval
    // prune a top-k bound, which is what keeps many-node clusters cheap.
    let proj_curve = surface.project(curve);
    let proj_k = surface.project(&k);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| -proj_curve.coeff(i + 1).abs());
    for delta in 1..=max_degree.max(0) {
        let target_sum = 3 * delta - 1;
        let target_sq = delta * delta + 1;
        let mut mus = vec![0i64; n];
        let prunes = [
            // curve . E <= 1
            LinearPrune {
                weights: order.iter().map(|&i| proj_curve.coeff(i + 1)).collect(),
                offset: proj_curve.coeff(0) * delta,
                min: i64::MIN,
                max: 1,
            },
            // K . E = -1
            LinearPrune {
                weights: order.iter().map(|&i| proj_k.coeff(i + 1)).collect(),
                offset: proj_k.coeff(0) * delta,
                min: -1,
                max: -1,
            },
        ];
        enumerate_solutions(
            &mut mus,
            0,
            target_sum,
            target_sq,
            delta,
            &prunes,
            [prunes[0].offset, prunes[1].offset],
            &mut |permuted| {
                let mut mus_natural = vec![0i64; n];
                for (slot, &i) in order.iter().enumerate() {
                    mus_natural[i] = permuted[slot];
                }
                let mut coeffs = vec![delta];
                coeffs.extend(mus_natural.iter().map(|m| -m));
                let class = DivisorClass::new(coeffs);
                let kind = match delta {
                    1 => CandidateKind::Line,
                    2 => CandidateKind::Conic,
                    _ => CandidateKind::SearchFound,
                };
                let admissible = admissible_support(model, &mus_natural);
                push(class, kind, admissible)
            },
        )?;
    }

    // Deterministic contraction order: cluster ends, then lines, conics,
    // deeper classes; ties by class coefficients.
    out.sort_by(|a, b| (a.kind, a.class.coeffs()).cmp(&(b.kind, b.class.coeffs())));
    Ok(out)
}

/// A linear functional offset + sum(weights_i * mu_i) that must land in
/// [min, max] on every emitted solution.
struct LinearPrune {
    weights: Vec<i64>,
    offset: i64,
    min: i64,
    max: i64,
}

/// Support must be proximity-admissible (mu_i at least the sum over points
/// proximate to it) and satellite-free: lines need two free points or a free
/// length-2 chain, deeper classes free chains.
fn admissible_support(model: &BlowupModel, mus: &[i64]) -> bool {
    for (i, p) in model.points.iter().enumerate() {
        let load: i64 = model
            .points
            .iter()
            .enumerate()
            .filter(|(_, q)| q.prox.contains(&i))
            .map(|(j, _)| mus[j])
            .sum();
        if mus[i] < load {
            return false;
        }
        if mus[i] > 0 && p.satellite {
            return false;
        }
    }
    true
}

/// Depth-first enumeration of mu >= 0 with fixed sum and sum of squares,
/// each entry at most `max_entry`, subject to linear pruning functionals.
#[allow(clippy::too_many_arguments)]
fn enumerate_solutions(
    mus: &mut Vec<i64>,
    pos: usize,
    sum: i64,
    sumsq: i64,
    max_entry: i64,
    prunes: &[LinearPrune; 2],
    partials: [i64; 2],
    emit: &mut dyn FnMut(&[i64]) -> Result<()>,
) -> Result<()> {
    if sum < 0 || sumsq < 0 {
        return Ok(());
    }
    let remaining = (mus.len() - pos) as i64;
    if pos == mus.len() {
        if sum == 0 && sumsq == 0 {
            emit(mus)?;
        }
        return Ok(());
    }
    // Feasibility: sum <= remaining * max_entry, sumsq <= sum * max_entry,
    // sum^2 <= sumsq * remaining.
    if sum > remaining * max_entry || sumsq > sum * max_entry || sum * sum > sumsq * remaining {
        return Ok(());
    }
    // Linear functionals: future contributions lie between -w_neg*sum and
    // w_pos*sum where w_neg/w_pos bound the remaining weights.
    for (prune, partial) in prunes.iter().zip(partials) {
        let tail = &prune.weights[pos..];
        let w_pos = tail.iter().copied().max().unwrap_or(0).max(0);
        let w_neg = (-tail.iter().copied().min().unwrap_or(0)).max(0);
        let hi = partial + w_pos * sum;
        let lo = partial - w_neg * sum;
        if hi < prune.min || lo > prune.max {
            return Ok(());
        }
    }
    let cap = max_entry.min(isqrt(sumsq));
    for v in 0..=cap {
        mus[pos] = v;
        let next = [
            partials[0] + prunes[0].weights[pos] * v,
            partials[1] + prunes[1].weights[pos] * v,
        ];
        enumerate_solutions(
            mus,
            pos + 1,
            sum - v,
            sumsq - v * v,
            max_entry,
            prunes,
            next,
            emit,
        )?;
    }
    mus[pos] = 0;
    Ok(())
}

fn isqrt(n: i64) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as i64 + 1;
    while x * x > n {
        x -= 1;
    }
    x
}

/// End state of the half-coefficient MMP.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum MmpEndState {
    /// All exceptional classes contracted; the curve has the given plane
    /// degree.
    Plane { degree: i64 },
    /// The curve is a fiber of a ruling.
    Fiber,
    /// The curve is a section of a ruling.
    Section,
    /// The curve is 2(C0 + f) on F_1.
    TwoSectionOnF1,
    /// No admissible contraction applies and no listed end state is reached.
    Stalled,
}

impl MmpEndState {
    /// End states that certify Cremona equivalence to a line.
    pub fn is_line_state(&self) -> bool {
        matches!(
            self,
            MmpEndState::Plane { degree } if *degree <= 2
        ) || matches!(
            self,
            MmpEndState::Fiber | MmpEndState::Section | MmpEndState::TwoSectionOnF1
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum MmpAction {
    Contract {
        class: DivisorClass,
        kind: CandidateKind,
        curve_pairing: i64,
    },
    AuxiliaryBlowup {
        label: String,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct MmpStep {
    pub action: MmpAction,
    pub effective_rank: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MmpRun {
    pub end_state: MmpEndState,
    pub steps: Vec<MmpStep>,
}

/// Run the half-coefficient MMP: contract admissible candidates in
/// deterministic order, recognize the listed rank-1 and rank-2 end states,
/// and fall back to auxiliary blow-ups at smooth curve points (the
/// rank-preserving links realizing quadratic maps, with curve pairing 1).
pub fn half_mmp(model: &BlowupModel, config: &CoolidgeConfig) -> Result<MmpRun> {
    let mut model = model.clone();
    let mut surface = model.surface.clone();
    let curve0 = model.curve_class.clone();
    let mut steps = Vec::new();
    let mut aux_used = 0usize;
    let guard = surface.rank() + 2 * config.aux_blowups + 8;

    for _ in 0..guard {
        let curve = curve0.extended_to(surface.rank());
        if let Some(end) = recognize_end_state(&surface, &curve)? {
            return Ok(MmpRun {
                end_state: end,
                steps,
            });
        }
        let candidates = candidates_on(&model, &surface, &curve, config.max_class_degree)?;
        let pick = candidates.into_iter().find(|c| {
            c.admissible
                && !surface
                    .project(&c.class.extended_to(surface.rank()))
                    .is_zero()
        });
        match pick {
            Some(cand) => {
                let class = cand.class.extended_to(surface.rank());
                if surface.intersect(&curve, &class)? > 1 {
                    return Err(EngineError::Internal(
                        "candidate with curve pairing above 1 slipped through".into(),
                    ));
                }
                surface = surface.contract(&class)?;
                steps.push(MmpStep {
                    action: MmpAction::Contract {
                        class: cand.class,
                        kind: cand.kind,
                        curve_pairing: cand.curve_pairing,
                    },
                    effective_rank: surface.effective_rank(),
                });
            }
            None if aux_used < config.aux_blowups => {
                aux_used += 1;
                let label = format!("x{aux_used}");
                surface = surface.blow_up(&label)?;
                // The new point is a smooth curve point: curve pairing 1.
                let mut coeffs = model.curve_class.coeffs().to_vec();
                coeffs.push(-1);
                model.curve_class = DivisorClass::new(coeffs);
                model.points.push(ModelPoint {
                    id: PointId::new(label.clone()),
                    mult: 1,
                    prox: Vec::new(),
                    satellite: false,
                    synthetic: true,
                });
                model.surface = model.surface.blow_up(&label)?;
                steps.push(MmpStep {
                    action: MmpAction::AuxiliaryBlowup { label },
                    effective_rank: surface.effective_rank(),
                });
            }
            None => {
                return Ok(MmpRun {
                    end_state: MmpEndState::Stalled,
                    steps,
                });
            }
        }
    }
    Ok(MmpRun {
        end_state: MmpEndState::Stalled,
        steps,
    })
}

impl DivisorClass {
    fn extended_to(&self, dim: usize) -> DivisorClass {
        let mut coeffs = self.coeffs().to_vec();
        coeffs.resize(dim, 0);
        DivisorClass::new(coeffs)
    }
}

/// Re-execute an MMP trace against the lattice, re-verifying E.E = -1,
/// K.E = -1 and curve.E <= 1 for every contraction and the recorded
/// effective rank after every action. Errors carry the index of the first
/// diverging step.
pub fn replay_mmp(model: &BlowupModel, steps: &[MmpStep]) -> Result<()> {
    let mut surface = model.surface.clone();
    let mut curve = model.curve_class.clone();
    for (idx, step) in steps.iter().enumerate() {
        let diverged = |message: String| EngineError::InvariantViolation {
            steps: idx,
            message,
        };
        match &step.action {
            MmpAction::Contract { class, .. } => {
                let e = class.extended_to(surface.rank());
                let c = curve.extended_to(surface.rank());
                let e2 = surface.intersect(&e, &e)?;
                let ke = surface.intersect(surface.canonical(), &e)?;
                let ce = surface.intersect(&c, &e)?;
                if e2 != -1 || ke != -1 {
                    return Err(diverged(format!(
                        "contraction conditions failed: E.E = {e2}, K.E = {ke}"
                    )));
                }
                if ce > 1 {
                    return Err(diverged(format!("curve pairing {ce} exceeds 1")));
                }
                surface = surface.contract(&e)?;
            }
            MmpAction::AuxiliaryBlowup { label } => {
                surface = surface.blow_up(label)?;
                let mut coeffs = curve.coeffs().to_vec();
                coeffs.resize(surface.rank(), 0);
                *coeffs.last_mut().expect("non-empty after blow-up") = -1;
                curve = DivisorClass::new(coeffs);
            }
        }
        if surface.effective_rank() != step.effective_rank {
            return Err(diverged(format!(
                "effective rank {} differs from recorded {}",
                surface.effective_rank(),
                step.effective_rank
            )));
        }
    }
    Ok(())
}

/// Rank-1 and rank-2 end-state recognition by intrinsic numbers.
fn recognize_end_state(
    surface: &BlowupSurface,
    curve: &DivisorClass,
) -> Result<Option<MmpEndState>> {
    match surface.effective_rank() {
        1 => {
            // Find the positive generator g with g.g = 1.
            for k in 0..surface.rank() {
                let p = surface.project(&DivisorClass::basis(k, surface.rank()));
                if p.is_zero() {
                    continue;
                }
                let s = surface.intersect(&p, &p)?;
                let c = isqrt(s);
                if s <= 0 || c * c != s {
                    continue;
                }
                if p.coeffs().iter().any(|&x| x % c != 0) {
                    continue;
                }
                let g = DivisorClass::new(p.coeffs().iter().map(|&x| x / c).collect());
                let mut degree = surface.intersect(curve, &g)?;
                if degree < 0 {
                    degree = -degree;
                }
                return Ok(Some(MmpEndState::Plane { degree }));
            }
            Err(EngineError::Internal(
                "rank-1 quotient without a unimodular generator".into(),
            ))
        }
        2 => {
            let fibers = fibration_classes(surface)?;
            if fibers.is_empty() {
                return Ok(None);
            }
            let mut best: Option<(i64, DivisorClass)> = None;
            for f in fibers {
                let pairing = surface.intersect(curve, &f)?;
                if pairing >= 0 && best.as_ref().map(|(b, _)| pairing < *b).unwrap_or(true) {
                    best = Some((pairing, f));
                }
            }
            let (pairing, _f) = match best {
                Some(b) => b,
                None => return Ok(None),
            };
            let c2 = surface.intersect(curve, curve)?;
            let kc = surface.intersect(surface.canonical(), curve)?;
            let end = match pairing {
                0 if c2 == 0 && kc == -2 => Some(MmpEndState::Fiber),
                1 => Some(MmpEndState::Section),
                2 if c2 == 4 && kc == -6 => Some(MmpEndState::TwoSectionOnF1),
                _ => None,
            };
            Ok(end)
        }
        _ => Ok(None),
    }
}

/// Classes f in the rank-2 quotient with f.f = 0, K.f = -2, oriented into
/// the effective cone.
fn fibration_classes(surface: &BlowupSurface) -> Result<Vec<DivisorClass>> {
    let dim = surface.rank();
    // A basis of the quotient from projected basis vectors.
    let mut basis: Vec<DivisorClass> = Vec::new();
    for k in 0..dim {
        let p = surface.project(&DivisorClass::basis(k, dim));
        if p.is_zero() {
            continue;
        }
        if basis.is_empty() {
            basis.push(p);
            continue;
        }
        if basis.len() == 1 {
            let u = &basis[0];
            let det = surface.intersect(u, u)? * surface.intersect(&p, &p)?
                - surface.intersect(u, &p)? * surface.intersect(u, &p)?;
            let independent = det != 0 || {
                // Degenerate Gram can still mean independence; check
                // coordinates.
                !are_proportional(u, &p)
            };
            if independent {
                basis.push(p);
                break;
            }
        }
    }
    if basis.len() < 2 {
        return Err(EngineError::Internal(
            "rank-2 quotient with fewer than two independent projections".into(),
        ));
    }
    let (u, v) = (basis[0].clone(), basis[1].clone());
    // Orientation: some class with positive self-intersection.
    let mut positive: Option<DivisorClass> = None;
    for (x, y) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2)] {
        let w = u.scale(x).add(&v.scale(y));
        if surface.intersect(&w, &w)? > 0 {
            positive = Some(w);
            break;
        }
    }
    let positive = positive
        .ok_or_else(|| EngineError::Internal("rank-2 quotient without positive classes".into()))?;

    let mut out: Vec<DivisorClass> = Vec::new();
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    let k = surface.canonical().clone();
    const RANGE: i64 = 16;
    for x in -RANGE..=RANGE {
        for y in -RANGE..=RANGE {
            if x == 0 && y == 0 {
                continue;
            }
            let f = u.scale(x).add(&v.scale(y));
            if surface.intersect(&f, &f)? != 0 {
                continue;
            }
            if surface.intersect(&k, &f)? != -2 {
                continue;
            }
            if surface.intersect(&f, &positive)? <= 0 {
                continue;
            }
            let key = f.coeffs().to_vec();
            if seen.insert(key) {
                out.push(f);
            }
        }
    }
    Ok(out)
}

fn are_proportional(a: &DivisorClass, b: &DivisorClass) -> bool {
    // a, b nonzero integer vectors: proportional iff all 2x2 minors vanish.
    for i in 0..a.dim() {
        for j in (i + 1)..a.dim() {
            if a.coeff(i) * b.coeff(j) - a.coeff(j) * b.coeff(i) != 0 {
                return false;
            }
        }
    }
    true
}

/// Verdict on Cremona equivalence to a line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LineStatus {
    EquivalentToLine,
    NotEquivalent,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub enum LineCertificate {
    /// MMP trace ending in a listed line state.
    MmpTrace { run: MmpRun },
    /// |2K + C| empty by degree drop.
    KmEmpty { report: KmReport },
    /// Explicit effective decomposition of 2K + C.
    Effective { report: KmReport },
    /// Both obstructions, for the undetermined region.
    Obstructions { km: KmReport, mmp: MmpRun },
}

#[derive(Clone, Debug, Serialize)]
pub struct LineVerdict {
    pub status: LineStatus,
    pub certificate: LineCertificate,
}

/// Decide Cremona equivalence to a line for a rational pair. Positive
/// verdicts come from the Kumar-Murthy emptiness test or from a completed
/// MMP; negative ones from an effective decomposition of 2K + C. The two
/// sound branches must never disagree; this is asserted.
pub fn line_equivalent(pair: &PlanePair, config: &CoolidgeConfig) -> Result<LineVerdict> {
    let km = km_empty_test(pair)?;
    let model = resolve_to_lattice(pair)?;
    let mmp = half_mmp(&model, config)?;
    let mmp_line = mmp.end_state.is_line_state();

    if km.outcome == KmOutcome::NonEmpty && mmp_line {
        return Err(EngineError::Internal(
            "soundness gate violated: |2K+C| effective while the MMP reached a line state".into(),
        ));
    }

    if mmp_line {
        return Ok(LineVerdict {
            status: LineStatus::EquivalentToLine,
            certificate: LineCertificate::MmpTrace { run: mmp },
        });
    }
    match km.outcome {
        KmOutcome::Empty => Ok(LineVerdict {
            status: LineStatus::EquivalentToLine,
            certificate: LineCertificate::KmEmpty { report: km },
        }),
        KmOutcome::NonEmpty => Ok(LineVerdict {
            status: LineStatus::NotEquivalent,
            certificate: LineCertificate::Effective { report: km },
        }),
        KmOutcome::Unknown => Ok(LineVerdict {
            status: LineStatus::Undetermined,
            certificate: LineCertificate::Obstructions { km, mmp },
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::{ClusterPoint, WeightedCluster};

    fn nodal_cubic() -> PlanePair {
        PlanePair::new(3, WeightedCluster::new(vec![ClusterPoint::free("n", 2)])).unwrap()
    }

    fn ten_node_sextic() -> PlanePair {
        let points = (1..=10)
            .map(|i| ClusterPoint::free(format!("n{i}"), 2))
            .collect();
        PlanePair::new(6, WeightedCluster::new(points)).unwrap()
    }

    #[test]
    fn resolve_nodal_cubic() {
        let model = resolve_to_lattice(&nodal_cubic()).unwrap();
        assert_eq!(model.surface.rank(), 2);
        assert_eq!(model.curve_class.coeffs(), &[3, -2]);
        let e1 = DivisorClass::basis(1, 2);
        assert_eq!(model.surface.intersect(&model.curve_class, &e1).unwrap(), 2);
    }

    #[test]
    fn resolve_ten_node_sextic() {
        let model = resolve_to_lattice(&ten_node_sextic()).unwrap();
        assert_eq!(model.surface.rank(), 11);
        assert_eq!(model.curve_class.coeff(0), 6);
    }

    #[test]
    fn resolve_rejects_positive_genus() {
        let sextic = PlanePair::new(
            6,
            WeightedCluster::new(vec![
                ClusterPoint::free("n", 2),
                ClusterPoint::free("t1", 2),
                ClusterPoint::near("t2", 2, "t1"),
            ]),
        )
        .unwrap();
        assert!(matches!(
            resolve_to_lattice(&sextic),
            Err(EngineError::NotRational(_))
        ));
    }

    #[test]
    fn unloading_fixed_points() {
        // Consistent class: unchanged.
        let prox = vec![vec![], vec![0]];
        let class = DivisorClass::new(vec![4, -2, -1]);
        assert_eq!(unloading(&class, &prox).unwrap(), class);
        // Non-positive multiplicities with no violation: unchanged.
        let class = DivisorClass::new(vec![4, 0, 0]);
        assert_eq!(unloading(&class, &prox).unwrap(), class);
    }

    #[test]
    fn unloading_two_chain() {
        // (delta; parent 1, child 2) -> (delta; 2, 1).
        let prox = vec![vec![], vec![0]];
        let class = DivisorClass::new(vec![4, -1, -2]);
        let unloaded = unloading(&class, &prox).unwrap();
        assert_eq!(unloaded.coeffs(), &[4, -2, -1]);
    }

    #[test]
    fn unloading_preserves_effective_membership() {
        // Brute-force oracle: a class is an effective combination of e0 and
        // the strict exceptional transforms iff its coordinates in that
        // triangular basis are non-negative. Check invariance on a 3-chain.
        let prox: Vec<Vec<usize>> = vec![vec![], vec![0], vec![1]];
        let effective_count = |class: &DivisorClass| -> usize {
            // exhaustive over x*e0 + sum z_i strict_i = class, coefficients
            // bounded by the class size
            let bound = class.coeffs().iter().map(|c| c.abs()).sum::<i64>() + 1;
            let strict = |i: usize| -> Vec<i64> {
                let mut v = vec![0i64; 4];
                v[i + 1] = 1;
                for j in 0..3 {
                    if prox[j].contains(&i) {
                        v[j + 1] -= 1;
                    }
                }
                v
            };
            let mut count = 0;
            for x in 0..=bound {
                for z0 in 0..=bound {
                    for z1 in 0..=bound {
                        for z2 in 0..=bound {
                            let mut v = vec![x, 0, 0, 0];
                            for (zi, i) in [(z0, 0), (z1, 1), (z2, 2)] {
                                let s = strict(i);
                                for (vc, sc) in v.iter_mut().zip(&s) {
                                    *vc += zi * sc;
                                }
                            }
                            if v == class.coeffs() {
                                count += 1;
                            }
                        }
                    }
                }
            }
            count
        };
        for coeffs in [
            vec![2, -1, -2, 0],
            vec![3, 0, -1, -2],
            vec![1, -1, -1, -1],
            vec![2, 0, 0, -2],
        ] {
            let class = DivisorClass::new(coeffs);
            let unloaded = unloading(&class, &prox).unwrap();
            assert_eq!(
                effective_count(&class),
                effective_count(&unloaded),
                "unloading changed effectivity of {:?}",
                class
            );
        }
    }

    #[test]
    fn km_low_degree_is_empty() {
        for d in 1..=5 {
            let mut points = Vec::new();
            // enough nodes to reach genus 0
            let nodes = (d - 1) * (d - 2) / 2;
            for i in 0..nodes {
                points.push(ClusterPoint::free(format!("n{i}"), 2));
            }
            let pair = PlanePair::new(d, WeightedCluster::new(points)).unwrap();
            let report = km_empty_test(&pair).unwrap();
            assert_eq!(report.outcome, KmOutcome::Empty, "degree {d}");
        }
    }

    #[test]
    fn km_ten_node_sextic_nonempty_zero_class() {
        let report = km_empty_test(&ten_node_sextic()).unwrap();
        assert_eq!(report.outcome, KmOutcome::NonEmpty);
        let decomposition = report.decomposition.unwrap();
        assert_eq!(decomposition.line_coefficient, 0);
        assert!(decomposition.exceptional.is_empty());
    }

    #[test]
    fn km_requires_rationality() {
        let pair = PlanePair::new(4, WeightedCluster::empty()).unwrap();
        assert!(km_empty_test(&pair).is_err());
    }

    #[test]
    fn candidates_for_ten_node_sextic_all_blocked() {
        let model = resolve_to_lattice(&ten_node_sextic()).unwrap();
        let candidates = find_contractible(&model, 3).unwrap();
        // Lines through two nodes pair 6 - 4 = 2 with the curve; ends pair 2.
        assert!(candidates.is_empty());
    }

    #[test]
    fn candidates_include_low_multiplicity_ends() {
        let pair = PlanePair::new(
            4,
            WeightedCluster::new(vec![
                ClusterPoint::free("a", 2),
                ClusterPoint::free("b", 2),
                ClusterPoint::free("c", 2),
            ]),
        )
        .unwrap();
        let model = resolve_to_lattice(&pair).unwrap();
        let candidates = find_contractible(&model, 2).unwrap();
        // Lines through two of the nodes pair 4 - 4 = 0 with the curve.
        assert!(candidates
            .iter()
            .any(|c| c.kind == CandidateKind::Line && c.curve_pairing == 0));
    }

    #[test]
    fn cluster_ends_with_low_multiplicity_are_included() {
        // A mult-1 end pairs 1 with the curve and stays a candidate; the
        // nodal end pairs 2 and is filtered out.
        let pair = PlanePair::new(
            5,
            WeightedCluster::new(vec![
                ClusterPoint::free("n", 3),
                ClusterPoint::free("a", 2),
                ClusterPoint::free("b", 2),
                ClusterPoint::free("c", 2),
                ClusterPoint::near("t", 1, "n"),
            ]),
        )
        .unwrap();
        assert_eq!(pair.combinatorial_genus().to_string(), "0");
        let model = resolve_to_lattice(&pair).unwrap();
        let candidates = find_contractible(&model, 2).unwrap();
        let ends: Vec<i64> = candidates
            .iter()
            .filter(|c| c.kind == CandidateKind::ClusterEnd)
            .map(|c| c.curve_pairing)
            .collect();
        assert_eq!(ends, vec![1], "only the smooth end survives C.E <= 1");
    }

    #[test]
    fn half_mmp_nodal_cubic_reaches_section() {
        let model = resolve_to_lattice(&nodal_cubic()).unwrap();
        let run = half_mmp(&model, &CoolidgeConfig::default()).unwrap();
        assert!(run.end_state.is_line_state());
    }

    #[test]
    fn half_mmp_smooth_conic_is_plane_end_state() {
        let conic = PlanePair::new(2, WeightedCluster::empty()).unwrap();
        let model = resolve_to_lattice(&conic).unwrap();
        let run = half_mmp(&model, &CoolidgeConfig::default()).unwrap();
        assert_eq!(run.end_state, MmpEndState::Plane { degree: 2 });
        assert!(run.steps.is_empty());
    }

    #[test]
    fn half_mmp_ten_node_sextic_stalls() {
        let model = resolve_to_lattice(&ten_node_sextic()).unwrap();
        let run = half_mmp(&model, &CoolidgeConfig::default()).unwrap();
        assert_eq!(run.end_state, MmpEndState::Stalled);
    }

    #[test]
    fn line_equivalent_examples() {
        let config = CoolidgeConfig::default();
        let verdict = line_equivalent(&nodal_cubic(), &config).unwrap();
        assert_eq!(verdict.status, LineStatus::EquivalentToLine);

        let verdict = line_equivalent(&ten_node_sextic(), &config).unwrap();
        assert_eq!(verdict.status, LineStatus::NotEquivalent);

        // Rational quintic with six nodes: empty by degree.
        let quintic = PlanePair::new(
            5,
            WeightedCluster::new(
                (1..=6)
                    .map(|i| ClusterPoint::free(format!("n{i}"), 2))
                    .collect(),
            ),
        )
        .unwrap();
        let verdict = line_equivalent(&quintic, &config).unwrap();
        assert_eq!(verdict.status, LineStatus::EquivalentToLine);
    }

    #[test]
    fn line_equivalent_rejects_irrational() {
        let pair = PlanePair::new(3, WeightedCluster::empty()).unwrap();
        assert!(line_equivalent(&pair, &CoolidgeConfig::default()).is_err());
    }
}

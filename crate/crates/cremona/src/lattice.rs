//! Intersection-lattice oracle for blowups and (-1)-class contractions of
//! rational surfaces.
//!
//! Surfaces are persistent values: `blow_up` and `contract` return new
//! surfaces. Contractions quotient by storing the contracted classes and
//! projecting, so every historical class stays addressable in one coordinate
//! system. This module is the ground truth the ruled-surface formulas are
//! verified against; in particular [`elm_oracle`] computes an elementary
//! transformation purely from blow-up, contraction and class pushforward.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{EngineError, Result};

/// An integer vector in the current basis of a surface lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DivisorClass {
    coeffs: Vec<i64>,
}

impl DivisorClass {
    pub fn new(coeffs: Vec<i64>) -> Self {
        DivisorClass { coeffs }
    }

    pub fn zero(dim: usize) -> Self {
        DivisorClass {
            coeffs: vec![0; dim],
        }
    }

    /// The basis vector e_i in a rank-`dim` lattice.
    pub fn basis(i: usize, dim: usize) -> Self {
        let mut coeffs = vec![0; dim];
        coeffs[i] = 1;
        DivisorClass { coeffs }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> i64 {
        self.coeffs[i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn add(&self, other: &DivisorClass) -> DivisorClass {
        DivisorClass {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &DivisorClass) -> DivisorClass {
        DivisorClass {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, k: i64) -> DivisorClass {
        DivisorClass {
            coeffs: self.coeffs.iter().map(|a| a * k).collect(),
        }
    }

    /// Extend with trailing zeros to dimension `dim`.
    fn extended(&self, dim: usize) -> DivisorClass {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(dim, 0);
        DivisorClass { coeffs }
    }
}

/// A rational surface presented by its intersection lattice: a symmetric Gram
/// matrix, the canonical class, basis labels, and the classes modded out by
/// contractions.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupSurface {
    gram: Vec<Vec<i64>>,
    canonical: DivisorClass,
    basis_labels: Vec<String>,
    /// Projected representatives of contracted (-1)-classes; pairwise
    /// orthogonal by construction.
    contracted: Vec<DivisorClass>,
}

impl BlowupSurface {
    /// P^2: rank 1, Gram (1), K = -3 e0.
    pub fn projective_plane() -> Self {
        BlowupSurface {
            gram: vec![vec![1]],
            canonical: DivisorClass::new(vec![-3]),
            basis_labels: vec!["e0".to_string()],
            contracted: Vec::new(),
        }
    }

    /// The Hirzebruch surface F_a in the (C0, f) basis:
    /// Gram ((-a, 1), (1, 0)), K = -2 C0 - (a+2) f.
    pub fn hirzebruch(a: i64) -> Result<Self> {
        if a < 0 {
            return Err(EngineError::Precondition(format!(
                "Hirzebruch index {a} must be non-negative"
            )));
        }
        if a > crate::cluster::MAX_CLASS_VALUE {
            return Err(EngineError::Precondition(format!(
                "Hirzebruch index {a} exceeds {}",
                crate::cluster::MAX_CLASS_VALUE
            )));
        }
        Ok(BlowupSurface {
            gram: vec![vec![-a, 1], vec![1, 0]],
            canonical: DivisorClass::new(vec![-2, -(a + 2)]),
            basis_labels: vec!["C0".to_string(), "f".to_string()],
            contracted: Vec::new(),
        })
    }

    /// Ambient basis size (not reduced by contractions).
    pub fn rank(&self) -> usize {
        self.basis_labels.len()
    }

    /// Rank of the actual surface lattice after contractions.
    pub fn effective_rank(&self) -> usize {
        self.rank() - self.contracted.len()
    }

    pub fn canonical(&self) -> &DivisorClass {
        &self.canonical
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    pub fn contracted(&self) -> &[DivisorClass] {
        &self.contracted
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.basis_labels.iter().position(|l| l == label)
    }

    fn check_dim(&self, x: &DivisorClass) -> Result<()> {
        if x.dim() != self.rank() {
            return Err(EngineError::DimensionMismatch {
                class: x.dim(),
                rank: self.rank(),
            });
        }
        Ok(())
    }

    /// Raw pairing A^T G B in the ambient lattice, ignoring contractions.
    /// Accumulated in 128 bits so extreme coefficients fail loudly instead of
    /// wrapping.
    fn raw_pairing(&self, a: &DivisorClass, b: &DivisorClass) -> i64 {
        let mut total = 0i128;
        for (i, ai) in a.coeffs().iter().enumerate() {
            if *ai == 0 {
                continue;
            }
            for (j, bj) in b.coeffs().iter().enumerate() {
                if *bj == 0 {
                    continue;
                }
                total += (*ai as i128) * (self.gram[i][j] as i128) * (*bj as i128);
            }
        }
        i64::try_from(total).expect("intersection number exceeds 64 bits")
    }

    /// Project along every contracted class: X -> X + (X.E) E for each, valid
    /// because each stored representative has self-intersection -1 and they
    /// are pairwise orthogonal.
    pub fn project(&self, x: &DivisorClass) -> DivisorClass {
        let mut cur = x.clone();
        for e in &self.contracted {
            let pairing = self.raw_pairing(&cur, e);
            if pairing != 0 {
                cur = cur.add(&e.scale(pairing));
            }
        }
        cur
    }

    /// Intersection number of A and B on the current surface.
    pub fn intersect(&self, a: &DivisorClass, b: &DivisorClass) -> Result<i64> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.raw_pairing(&self.project(a), &self.project(b)))
    }

    /// Blow up a point: rank grows by one, the Gram matrix gains a -1 entry,
    /// and K gains +1 on the new basis vector.
    pub fn blow_up(&self, label: &str) -> Result<Self> {
        if self.basis_labels.iter().any(|l| l == label) {
            return Err(EngineError::DuplicateLabel(label.to_string()));
        }
        let n = self.rank();
        let mut gram: Vec<Vec<i64>> = self
            .gram
            .iter()
            .map(|row| {
                let mut r = row.clone();
                r.push(0);
                r
            })
            .collect();
        let mut last = vec![0i64; n + 1];
        last[n] = -1;
        gram.push(last);

        let mut canonical = self.canonical.extended(n + 1);
        let mut coeffs = canonical.coeffs().to_vec();
        coeffs[n] = 1;
        canonical = DivisorClass::new(coeffs);

        let mut labels = self.basis_labels.clone();
        labels.push(label.to_string());

        let surface = BlowupSurface {
            gram,
            canonical,
            basis_labels: labels,
            contracted: self.contracted.iter().map(|e| e.extended(n + 1)).collect(),
        };
        debug_assert!(surface.signature_ok());
        Ok(surface)
    }

    /// Contract a (-1)-class: requires E.E = -1 and K.E = -1 on the current
    /// surface. Subsequent classes are projected along E; the new canonical
    /// class is the projection of K + E.
    pub fn contract(&self, e: &DivisorClass) -> Result<Self> {
        self.check_dim(e)?;
        let rep = self.project(e);
        let self_int = self.raw_pairing(&rep, &rep);
        if self_int != -1 {
            return Err(EngineError::NotContractible(format!(
                "E.E = {self_int}, expected -1"
            )));
        }
        let k_e = self.raw_pairing(&self.canonical, &rep);
        if k_e != -1 {
            return Err(EngineError::NotContractible(format!(
                "K.E = {k_e}, expected -1"
            )));
        }
        let mut contracted = self.contracted.clone();
        contracted.push(rep.clone());
        // proj(K + E) along E equals K - E when K.E = E.E = -1.
        let canonical = self.canonical.sub(&rep);
        let surface = BlowupSurface {
            gram: self.gram.clone(),
            canonical,
            basis_labels: self.basis_labels.clone(),
            contracted,
        };
        debug_assert!(surface.signature_ok());
        Ok(surface)
    }

    /// Signature (positive, negative, zero) of the ambient Gram matrix,
    /// computed by symmetric Gaussian elimination over the rationals.
    #[allow(clippy::needless_range_loop)] // row/column sweeps over one matrix
    pub fn signature(&self) -> (usize, usize, usize) {
        let n = self.rank();
        let mut m: Vec<Vec<BigRational>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| BigRational::from(BigInt::from(self.gram[i][j])))
                    .collect()
            })
            .collect();
        let (mut pos, mut neg, mut zero) = (0usize, 0usize, 0usize);
        let mut row = 0usize;
        while row < n {
            if m[row][row].is_zero() {
                // Find j > row with m[row][j] != 0 and mix row j in so the
                // pivot becomes nonzero; if none, the row is null.
                match (row + 1..n).find(|&j| !m[row][j].is_zero() || !m[j][row].is_zero()) {
                    Some(j) => {
                        for k in 0..n {
                            let t = m[j][k].clone();
                            m[row][k] += t;
                        }
                        for mk in m.iter_mut() {
                            let t = mk[j].clone();
                            mk[row] += t;
                        }
                        continue;
                    }
                    None => {
                        zero += 1;
                        row += 1;
                        continue;
                    }
                }
            }
            let pivot = m[row][row].clone();
            if pivot.is_positive() {
                pos += 1;
            } else {
                neg += 1;
            }
            for i in row + 1..n {
                let factor = &m[i][row] / &pivot;
                if factor.is_zero() {
                    continue;
                }
                for k in 0..n {
                    let t = &m[row][k] * &factor;
                    m[i][k] -= t;
                }
            }
            for k in row + 1..n {
                let factor = &m[row][k] / &pivot;
                if factor.is_zero() {
                    continue;
                }
                for i in 0..n {
                    let t = &m[i][row] * &factor;
                    m[i][k] -= t;
                }
            }
            row += 1;
        }
        (pos, neg, zero)
    }

    fn signature_ok(&self) -> bool {
        self.signature() == (1, self.rank() - 1, 0)
    }
}

/// Output of [`elm_oracle`]: the target Hirzebruch index, the pushed-forward
/// class in its (C0, f) basis, and the multiplicity of the point created
/// under the contracted fiber.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ElmOracleResult {
    pub a: i64,
    pub alpha: i64,
    pub beta: i64,
    pub new_point_mult: i64,
}

/// Compute an elementary transformation of (F_a, alpha C0 + beta f) at a
/// center of the given multiplicity purely inside the lattice: blow up the
/// center, contract the strict transform of the fiber through it, and push
/// the class forward to the (C0, f) basis of the target surface.
///
/// The surface index moves up iff the center lies on C0; on F_0 the direction
/// is forced upward whatever the center.
pub fn elm_oracle(
    a: i64,
    alpha: i64,
    beta: i64,
    center_on_c0: bool,
    center_mult: i64,
) -> Result<ElmOracleResult> {
    if alpha < 1 {
        return Err(EngineError::Precondition(format!(
            "alpha = {alpha} must be at least 1"
        )));
    }
    if center_mult < 0 {
        return Err(EngineError::Precondition(format!(
            "center multiplicity {center_mult} must be non-negative"
        )));
    }
    if center_mult > alpha {
        return Err(EngineError::Precondition(format!(
            "center multiplicity {center_mult} exceeds alpha = {alpha}: the fiber would be contained in the curve"
        )));
    }

    let base = BlowupSurface::hirzebruch(a)?;
    let up = center_on_c0 || a == 0;

    let blown = base.blow_up("E")?;
    // Pullback basis (C0, f, E): strict transforms subtract the multiplicity
    // at the center.
    let curve = DivisorClass::new(vec![alpha, beta, -center_mult]);
    let fiber_strict = DivisorClass::new(vec![0, 1, -1]);
    let new_point_mult = blown.intersect(&curve, &fiber_strict)?;

    let surface = blown.contract(&fiber_strict)?;

    // The exceptional section of the target: for an upward move it is the
    // strict transform of the curve through the center transverse to the
    // fiber (C0 itself when the center is on C0, the second-ruling fiber
    // through the center when a = 0); for a downward move it is the image of
    // C0, which passes through the new point.
    let section_upstairs = if up {
        DivisorClass::new(vec![1, 0, -1])
    } else {
        DivisorClass::basis(0, 3)
    };
    let c0_next = surface.project(&section_upstairs);
    let f_next = surface.project(&DivisorClass::basis(1, 3));
    let next_a = -surface.intersect(&c0_next, &c0_next)?;
    if next_a != if up { a + 1 } else { a - 1 } {
        return Err(EngineError::Internal(format!(
            "elm oracle: expected index {} got {}",
            if up { a + 1 } else { a - 1 },
            next_a
        )));
    }

    // Solve curve = x * C0' + y * f' in the quotient, coordinate by
    // coordinate, and check consistency.
    let pushed = surface.project(&curve);
    let (x, y) = solve_in_basis(&pushed, &c0_next, &f_next)?;

    // The canonical class of the target must match -2 C0' - (a'+2) f'.
    let expected_k = c0_next.scale(-2).add(&f_next.scale(-(next_a + 2)));
    if surface.project(surface.canonical()) != surface.project(&expected_k) {
        return Err(EngineError::Internal(
            "elm oracle: canonical class mismatch on the target surface".into(),
        ));
    }

    Ok(ElmOracleResult {
        a: next_a,
        alpha: x,
        beta: y,
        new_point_mult,
    })
}

/// Solve v = x*u1 + y*u2 exactly over the integers; errors when the system is
/// inconsistent.
fn solve_in_basis(v: &DivisorClass, u1: &DivisorClass, u2: &DivisorClass) -> Result<(i64, i64)> {
    let n = v.dim();
    // Find two coordinates where (u1, u2) has an invertible 2x2 minor.
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let det = u1.coeff(i) * u2.coeff(j) - u1.coeff(j) * u2.coeff(i);
            if det == 0 {
                continue;
            }
            let xn = v.coeff(i) * u2.coeff(j) - v.coeff(j) * u2.coeff(i);
            let yn = u1.coeff(i) * v.coeff(j) - u1.coeff(j) * v.coeff(i);
            if xn % det != 0 || yn % det != 0 {
                continue;
            }
            let x = xn / det;
            let y = yn / det;
            if u1.scale(x).add(&u2.scale(y)) == *v {
                return Ok((x, y));
            }
        }
    }
    Err(EngineError::Internal(
        "class does not lie in the span of the target basis".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_section_self_intersection() {
        let s = BlowupSurface::hirzebruch(1).unwrap();
        let c0 = DivisorClass::basis(0, 2);
        assert_eq!(s.intersect(&c0, &c0).unwrap(), -1);
    }

    #[test]
    fn f2_pairing_expands_by_hand() {
        let s = BlowupSurface::hirzebruch(2).unwrap();
        let a = DivisorClass::new(vec![4, 8]);
        let b = DivisorClass::new(vec![2, 4]);
        // (4 C0 + 8 f).(2 C0 + 4 f) = 8*(-2) + 16 + 16 = 16.
        assert_eq!(s.intersect(&a, &b).unwrap(), 16);
    }

    #[test]
    fn plane_line_through_two_points() {
        let s = BlowupSurface::projective_plane()
            .blow_up("e1")
            .unwrap()
            .blow_up("e2")
            .unwrap();
        let line = DivisorClass::new(vec![1, -1, -1]);
        assert_eq!(s.intersect(&line, &line).unwrap(), -1);
    }

    #[test]
    fn blow_up_extends_canonical() {
        let s = BlowupSurface::projective_plane().blow_up("e1").unwrap();
        assert_eq!(s.rank(), 2);
        assert_eq!(s.canonical(), &DivisorClass::new(vec![-3, 1]));
        let k = s.canonical().clone();
        assert_eq!(s.intersect(&k, &k).unwrap(), 8);
        let s = s.blow_up("e2").unwrap();
        let k = s.canonical().clone();
        assert_eq!(s.intersect(&k, &k).unwrap(), 7);
        assert!(s.blow_up("e1").is_err());
    }

    #[test]
    fn strict_section_drops_by_one_on_blow_up() {
        let s = BlowupSurface::hirzebruch(1).unwrap().blow_up("E").unwrap();
        let strict_c0 = DivisorClass::new(vec![1, 0, -1]);
        assert_eq!(s.intersect(&strict_c0, &strict_c0).unwrap(), -2);
    }

    #[test]
    fn contract_restores_k_squared() {
        let s = BlowupSurface::projective_plane()
            .blow_up("e1")
            .unwrap()
            .blow_up("e2")
            .unwrap();
        let e2 = DivisorClass::basis(2, 3);
        let t = s.contract(&e2).unwrap();
        let k = t.canonical().clone();
        assert_eq!(t.intersect(&k, &k).unwrap(), 8);
        assert_eq!(t.effective_rank(), 2);
        // Contracting the same class twice fails: its projection is 0.
        assert!(t.contract(&e2).is_err());
    }

    #[test]
    fn contract_line_class_gives_zero_self_intersection_images() {
        let s = BlowupSurface::projective_plane()
            .blow_up("e1")
            .unwrap()
            .blow_up("e2")
            .unwrap();
        let line = DivisorClass::new(vec![1, -1, -1]);
        let t = s.contract(&line).unwrap();
        let e1 = DivisorClass::basis(1, 3);
        assert_eq!(t.intersect(&e1, &e1).unwrap(), 0);
    }

    #[test]
    fn contract_requires_minus_one_conditions() {
        let s = BlowupSurface::projective_plane().blow_up("e1").unwrap();
        let e0 = DivisorClass::basis(0, 2);
        assert!(s.contract(&e0).is_err());
    }

    #[test]
    fn signature_is_preserved() {
        let mut s = BlowupSurface::hirzebruch(0).unwrap();
        assert_eq!(s.signature(), (1, 1, 0));
        for i in 0..4 {
            s = s.blow_up(&format!("E{i}")).unwrap();
            assert_eq!(s.signature(), (1, s.rank() - 1, 0));
        }
    }

    #[test]
    fn blow_up_then_contract_is_identity_on_classes() {
        let s = BlowupSurface::hirzebruch(3).unwrap();
        let x = DivisorClass::new(vec![5, 17]);
        let blown = s.blow_up("E").unwrap();
        let back = blown.contract(&DivisorClass::basis(2, 3)).unwrap();
        let x3 = DivisorClass::new(vec![5, 17, 0]);
        assert_eq!(
            back.intersect(&x3, &x3).unwrap(),
            s.intersect(&x, &x).unwrap()
        );
        assert_eq!(back.project(&x3), x3);
    }

    #[test]
    fn elm_oracle_sextic_f1_to_f2() {
        // The F2 model of the node-plus-tacnode sextic.
        let r = elm_oracle(1, 4, 6, true, 2).unwrap();
        assert_eq!(
            r,
            ElmOracleResult {
                a: 2,
                alpha: 4,
                beta: 8,
                new_point_mult: 2
            }
        );
    }

    #[test]
    fn elm_oracle_on_c0_node_of_3c0_plus_11f() {
        let r = elm_oracle(3, 3, 11, true, 2).unwrap();
        assert_eq!(
            r,
            ElmOracleResult {
                a: 4,
                alpha: 3,
                beta: 12,
                new_point_mult: 1
            }
        );
    }

    #[test]
    fn elm_oracle_off_c0_goes_down_with_beta_minus_m() {
        let r = elm_oracle(3, 3, 11, false, 2).unwrap();
        assert_eq!(
            r,
            ElmOracleResult {
                a: 2,
                alpha: 3,
                beta: 9,
                new_point_mult: 1
            }
        );
    }

    #[test]
    fn elm_oracle_forced_up_on_f0() {
        let r = elm_oracle(0, 3, 5, false, 2).unwrap();
        assert_eq!(
            r,
            ElmOracleResult {
                a: 1,
                alpha: 3,
                beta: 6,
                new_point_mult: 1
            }
        );
    }

    #[test]
    fn elm_oracle_rejects_fiber_in_curve() {
        assert!(elm_oracle(1, 2, 5, false, 3).is_err());
        assert!(elm_oracle(1, 2, 5, false, 2).is_ok());
    }
}

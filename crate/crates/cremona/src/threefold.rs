//! Numerical degree/multiplicity arithmetic for threefolds: the scroll case
//! reduction and the complete-intersection projection certificate. Arithmetic
//! only; no threefold geometry is simulated.

use serde::Serialize;

use crate::cluster::{noether_fano_certificate, Certificate};
use crate::error::{EngineError, Result};

/// A surface of degree d in P^3 with a line of multiplicity d - 1 (the scroll
/// normal form).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScrollState {
    pub degree: i64,
    pub line_mult: i64,
}

/// One reduction step with both degree identities instantiated.
#[derive(Clone, Debug, Serialize)]
pub struct ScrollStep {
    pub from: ScrollState,
    pub to: ScrollState,
    pub degree_identity: String,
    pub mult_identity: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScrollReduction {
    pub states: Vec<ScrollState>,
    pub steps: Vec<ScrollStep>,
}

/// Reduce (d, d-1) step by step to the immediate case (2, 1): each quadratic
/// map sends the degree to 3d - 2(d-1) - 3 = d - 1 and the line multiplicity
/// to 2d - (d-1) - 3 = d - 2.
pub fn scroll_reduction(degree: i64) -> Result<ScrollReduction> {
    if degree < 2 {
        return Err(EngineError::Precondition(format!(
            "scroll reduction needs degree >= 2, got {degree}"
        )));
    }
    let mut states = vec![ScrollState {
        degree,
        line_mult: degree - 1,
    }];
    let mut steps = Vec::new();
    let mut d = degree;
    while d > 2 {
        let from = ScrollState {
            degree: d,
            line_mult: d - 1,
        };
        let new_degree = 3 * d - 2 * (d - 1) - 3;
        let new_mult = 2 * d - (d - 1) - 3;
        if new_degree != d - 1 || new_mult != d - 2 {
            return Err(EngineError::Internal(
                "scroll identities failed to reduce by one".into(),
            ));
        }
        let to = ScrollState {
            degree: new_degree,
            line_mult: new_mult,
        };
        steps.push(ScrollStep {
            from,
            to,
            degree_identity: format!("3*{d} - 2*{} - 3 = {new_degree}", d - 1),
            mult_identity: format!("2*{d} - {} - 3 = {new_mult}", d - 1),
        });
        states.push(to);
        d = new_degree;
    }
    Ok(ScrollReduction { states, steps })
}

/// A smooth codimension-two complete intersection of degrees (a, b) of
/// dimension k, compared through its two projections to P^{k+1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProjectionPair {
    pub a: i64,
    pub b: i64,
    pub k: i64,
}

impl ProjectionPair {
    pub fn new(a: i64, b: i64, k: i64) -> Result<Self> {
        if a < 2 || b < a {
            return Err(EngineError::Precondition(format!(
                "need 2 <= a <= b, got a = {a}, b = {b}"
            )));
        }
        if k < 1 {
            return Err(EngineError::Precondition(format!(
                "dimension k = {k} must be at least 1"
            )));
        }
        Ok(ProjectionPair { a, b, k })
    }
}

/// The general projection (degree ab, multiplicities at most a) and the
/// inner projection (degree ab - 1) are not Cremona equivalent as soon as
/// a(k + 2) <= ab, i.e. b >= k + 2.
pub fn ci_projection_certificate(p: &ProjectionPair) -> Result<Certificate> {
    let (a, b, k) = (p.a, p.b, p.k);
    let d_high = a * b;
    let d_low = a * b - 1;
    noether_fano_certificate(k + 1, d_high, d_low, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scroll_reduction_degree_five() {
        let r = scroll_reduction(5).unwrap();
        let expected = vec![(5, 4), (4, 3), (3, 2), (2, 1)];
        let got: Vec<(i64, i64)> = r.states.iter().map(|s| (s.degree, s.line_mult)).collect();
        assert_eq!(got, expected);
        assert_eq!(r.steps.len(), 3);
    }

    #[test]
    fn scroll_reduction_base_case() {
        let r = scroll_reduction(2).unwrap();
        assert_eq!(
            r.states,
            vec![ScrollState {
                degree: 2,
                line_mult: 1
            }]
        );
        assert!(r.steps.is_empty());
    }

    #[test]
    fn scroll_reduction_step_identities() {
        let r = scroll_reduction(3).unwrap();
        assert_eq!(r.steps[0].degree_identity, "3*3 - 2*2 - 3 = 2");
        assert_eq!(r.steps[0].mult_identity, "2*3 - 2 - 3 = 1");
    }

    #[test]
    fn scroll_reduction_rejects_degree_one() {
        assert!(scroll_reduction(1).is_err());
    }

    #[test]
    fn scroll_state_count_is_degree_minus_one() {
        for d in 2..=9 {
            let r = scroll_reduction(d).unwrap();
            assert_eq!(r.states.len() as i64, d - 1);
            for s in &r.states {
                assert_eq!(s.line_mult, s.degree - 1);
            }
        }
    }

    #[test]
    fn ci_certificates() {
        let c = ci_projection_certificate(&ProjectionPair::new(2, 4, 2).unwrap()).unwrap();
        assert!(c.holds);
        let c = ci_projection_certificate(&ProjectionPair::new(2, 3, 2).unwrap()).unwrap();
        assert!(!c.holds);
        let c = ci_projection_certificate(&ProjectionPair::new(3, 16, 14).unwrap()).unwrap();
        assert!(c.holds);
    }

    #[test]
    fn ci_certificate_monotone_in_b() {
        for a in 2..=4 {
            for k in 1..=6 {
                let mut prev = false;
                for b in a..=(k + 6) {
                    let holds = ci_projection_certificate(&ProjectionPair::new(a, b, k).unwrap())
                        .unwrap()
                        .holds;
                    assert!(!prev || holds, "monotonicity broke at a={a}, b={b}, k={k}");
                    prev = holds;
                }
            }
        }
    }

    #[test]
    fn projection_pair_validation() {
        assert!(ProjectionPair::new(1, 3, 2).is_err());
        assert!(ProjectionPair::new(3, 2, 2).is_err());
        assert!(ProjectionPair::new(2, 2, 0).is_err());
    }
}

//! Weighted sums of q-Appell values, the right-hand sides of every identity.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::phi::{eval_phi, ser_complex, EvalConfig, PhiSpec, SeriesValue};
use crate::qcore::Complex;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    #[serde(rename = "coeff", serialize_with = "ser_complex")]
    pub coeff: Complex,
    pub spec: PhiSpec,
}

/// Ordered list of `(coefficient, spec)` pairs sharing one kind and one base.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TermList {
    terms: Vec<Term>,
}

impl TermList {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("term list must not be empty".into()))?;
        let (kind, q) = (first.spec.kind, first.spec.q);
        if terms.iter().any(|t| t.spec.kind != kind || t.spec.q != q) {
            return Err(Error::InvalidParameter(
                "all terms must share kind and base".into(),
            ));
        }
        Ok(TermList { terms })
    }

    pub fn single(spec: PhiSpec) -> Self {
        TermList {
            terms: vec![Term {
                coeff: Complex::new(1.0, 0.0),
                spec,
            }],
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when both lists hold the same specs (bit-identical parameters) with
    /// coefficients within `tol`, up to reordering.
    pub fn same_structure(&self, other: &TermList, tol: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        for t in &self.terms {
            let hit = other.terms.iter().enumerate().find(|(j, u)| {
                !used[*j]
                    && specs_match(&t.spec, &u.spec)
                    && (t.coeff - u.coeff).norm()
                        <= tol * t.coeff.norm().max(u.coeff.norm()).max(1.0)
            });
            match hit {
                Some((j, _)) => used[j] = true,
                None => return false,
            }
        }
        true
    }
}

/// Specs agree to the last couple of ulps; different routes to `a q^k` may round differently.
fn specs_match(a: &PhiSpec, b: &PhiSpec) -> bool {
    let near =
        |u: Complex, v: Complex| (u - v).norm() <= 1e-15 * u.norm().max(v.norm()).max(1e-300);
    a.kind == b.kind
        && a.q == b.q
        && near(a.x, b.x)
        && near(a.y, b.y)
        && a.numerators
            .iter()
            .zip(&b.numerators)
            .all(|(u, v)| near(*u, *v))
        && a.denominators
            .iter()
            .zip(&b.denominators)
            .all(|(u, v)| near(*u, *v))
}

/// `sum coeff_i * Phi(spec_i)`, with the tail bounds weighted by `|coeff_i|`.
pub fn evaluate_term_list(tl: &TermList, cfg: &EvalConfig) -> Result<SeriesValue> {
    let mut value = Complex::new(0.0, 0.0);
    let mut tail_bound = 0.0;
    let mut layers_used = 0;
    for (index, t) in tl.terms.iter().enumerate() {
        let v = eval_phi(&t.spec, cfg).map_err(|e| Error::InTerm {
            index,
            source: Box::new(e),
        })?;
        value += t.coeff * v.value;
        tail_bound += t.coeff.norm() * v.tail_bound;
        layers_used = layers_used.max(v.layers_used);
    }
    Ok(SeriesValue {
        value,
        layers_used,
        tail_bound,
    })
}

/// `|L - R| / (1e-300 + max(1, |L|, |R|))`.
pub fn relative_residual(lhs: Complex, rhs: Complex) -> f64 {
    (lhs - rhs).norm() / (1e-300 + lhs.norm().max(rhs.norm()).max(1.0))
}

/// Outcome of checking one identity at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub residual: f64,
    #[serde(serialize_with = "ser_complex")]
    pub lhs: Complex,
    #[serde(serialize_with = "ser_complex")]
    pub rhs: Complex,
}

impl Residual {
    pub fn between(lhs: Complex, rhs: Complex) -> Self {
        Residual {
            residual: relative_residual(lhs, rhs),
            lhs,
            rhs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::QBase;

    fn spec() -> PhiSpec {
        let c = |v| Complex::new(v, 0.0);
        PhiSpec::phi1(
            QBase::real(0.5).unwrap(),
            c(0.3),
            c(0.2),
            c(0.1),
            c(0.7),
            c(0.2),
            c(0.1),
        )
        .unwrap()
    }

    #[test]
    fn singleton_equals_direct_evaluation() {
        let cfg = EvalConfig::default();
        let direct = eval_phi(&spec(), &cfg).unwrap();
        let listed = evaluate_term_list(&TermList::single(spec()), &cfg).unwrap();
        assert_eq!(direct, listed);
    }

    #[test]
    fn opposite_terms_cancel() {
        let cfg = EvalConfig::default();
        let one = eval_phi(&spec(), &cfg).unwrap();
        let tl = TermList::new(vec![
            Term {
                coeff: Complex::new(2.0, 0.0),
                spec: spec(),
            },
            Term {
                coeff: Complex::new(-2.0, 0.0),
                spec: spec(),
            },
        ])
        .unwrap();
        let v = evaluate_term_list(&tl, &cfg).unwrap();
        assert_eq!(v.value, Complex::new(0.0, 0.0));
        assert_eq!(v.tail_bound, 4.0 * one.tail_bound);
    }

    #[test]
    fn errors_carry_term_index() {
        let bad = spec().with(crate::phi::Param::C, Complex::new(2.0, 0.0));
        let tl = TermList::new(vec![
            Term {
                coeff: Complex::new(1.0, 0.0),
                spec: spec(),
            },
            Term {
                coeff: Complex::new(1.0, 0.0),
                spec: bad,
            },
        ])
        .unwrap();
        match evaluate_term_list(&tl, &EvalConfig::default()) {
            Err(Error::InTerm { index: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_mixed_lists_are_rejected() {
        assert!(TermList::new(vec![]).is_err());
        let other = PhiSpec::phi4(
            QBase::real(0.5).unwrap(),
            Complex::new(0.1, 0.0),
            Complex::new(0.1, 0.0),
            Complex::new(0.1, 0.0),
            Complex::new(0.1, 0.0),
            Complex::new(0.1, 0.0),
            Complex::new(0.1, 0.0),
        )
        .unwrap();
        let one = Complex::new(1.0, 0.0);
        assert!(TermList::new(vec![
            Term {
                coeff: one,
                spec: spec()
            },
            Term {
                coeff: one,
                spec: other
            }
        ])
        .is_err());
    }

    #[test]
    fn residual_normalisation() {
        let r = relative_residual(Complex::new(1e-20, 0.0), Complex::new(0.0, 0.0));
        assert_eq!(r, 1e-20);
        let r = relative_residual(Complex::new(1e6, 0.0), Complex::new(1e6 + 1.0, 0.0));
        assert!((r - 1.0 / (1e6 + 1.0)).abs() < 1e-18);
    }
}

//! Single-step contiguous relations.
//!
//! Each relation expresses `Phi` with one parameter multiplied by `q` or `q^-1`
//! as a [`TermList`] over the unshifted base point. Four relations (the
//! `c`-shifts of `Phi2` and `Phi4`) exist in two printings that disagree on
//! whether `y` is rescaled; both are kept and told apart by [`Variant`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::phi::{eval_phi, EvalConfig, Param, PhiKind, PhiSpec};
use crate::qcore::{Complex, DEFAULT_POLE_EPS};
use crate::terms::{evaluate_term_list, Residual, Term, TermList};

/// Which parameter a relation shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shifted {
    A,
    B,
    C,
}

impl Shifted {
    pub fn param(self) -> Param {
        match self {
            Shifted::A => Param::A,
            Shifted::B => Param::B,
            Shifted::C => Param::C,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Shifted::A => "a",
            Shifted::B => "b",
            Shifted::C => "c",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Up => 1,
            Direction::Down => -1,
        }
    }
}

/// Which printing of an identity to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// As typeset in the source.
    Printed,
    /// As re-derived from the defining series.
    Derived,
}

impl Variant {
    pub fn suffix(self) -> &'static str {
        match self {
            Variant::Printed => "printed",
            Variant::Derived => "derived",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

/// Splits an optional trailing `.printed` / `.derived` off an identity string.
pub fn split_variant(s: &str) -> (&str, Option<Variant>) {
    if let Some(base) = s.strip_suffix(".printed") {
        (base, Some(Variant::Printed))
    } else if let Some(base) = s.strip_suffix(".derived") {
        (base, Some(Variant::Derived))
    } else {
        (s, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationId {
    pub kind: PhiKind,
    pub param: Shifted,
    pub direction: Direction,
    pub variant: Variant,
}

impl RelationId {
    pub fn new(
        kind: PhiKind,
        param: Shifted,
        direction: Direction,
        variant: Variant,
    ) -> Result<Self> {
        let valid = match kind {
            PhiKind::Phi1 | PhiKind::Phi2 => true,
            PhiKind::Phi3 => param != Shifted::A,
            PhiKind::Phi4 => param != Shifted::B,
        };
        if !valid {
            return Err(Error::UnsupportedRelation(format!(
                "{kind} has no contiguous relation in `{}`",
                param.name()
            )));
        }
        Ok(RelationId {
            kind,
            param,
            direction,
            variant,
        })
    }

    /// The 20 relations, `Derived` variant, in catalog order.
    pub fn all() -> Vec<RelationId> {
        let mut out = Vec::new();
        for kind in PhiKind::ALL {
            for param in [Shifted::A, Shifted::B, Shifted::C] {
                for direction in [Direction::Up, Direction::Down] {
                    if let Ok(id) = RelationId::new(kind, param, direction, Variant::Derived) {
                        out.push(id);
                    }
                }
            }
        }
        out
    }

    /// Whether the two printings of this relation differ.
    pub fn is_flagged(&self) -> bool {
        self.param == Shifted::C && matches!(self.kind, PhiKind::Phi2 | PhiKind::Phi4)
    }

    pub fn with_variant(self, variant: Variant) -> Self {
        RelationId { variant, ..self }
    }

    /// Identifier without the variant suffix, e.g. `phi1.a.up`.
    pub fn base_id(&self) -> String {
        let dir = match self.direction {
            Direction::Up => "up",
            Direction::Down => "down",
        };
        format!("{}.{}.{}", self.kind, self.param.name(), dir)
    }

    /// The left-hand side: `base` with the relation's parameter moved by `q^{+-1}`.
    pub fn lhs(&self, base: &PhiSpec) -> PhiSpec {
        base.scaled(&[(self.param.param(), self.direction.sign())])
    }

    /// Whether the `c`-shift also rescales `y`.
    fn c_shift_moves_y(&self) -> bool {
        match self.kind {
            PhiKind::Phi1 | PhiKind::Phi3 => true,
            PhiKind::Phi2 | PhiKind::Phi4 => self.variant == Variant::Printed,
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base_id())?;
        if self.is_flagged() {
            write!(f, ".{}", self.variant)?;
        }
        Ok(())
    }
}

impl FromStr for RelationId {
    type Err = Error;

    /// Parses `phi<k>.<a|b|c>.<up|down>[.printed|.derived]`; a missing suffix means `Derived`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownIdentity(s.to_string());
        let (base, variant) = split_variant(s);
        let mut parts = base.split('.');
        let kind: PhiKind = parts
            .next()
            .ok_or_else(unknown)?
            .parse()
            .map_err(|_| unknown())?;
        let param = match parts.next() {
            Some("a") => Shifted::A,
            Some("b") => Shifted::B,
            Some("c") => Shifted::C,
            _ => return Err(unknown()),
        };
        let direction = match parts.next() {
            Some("up") => Direction::Up,
            Some("down") => Direction::Down,
            _ => return Err(unknown()),
        };
        if parts.next().is_some() {
            return Err(unknown());
        }
        RelationId::new(kind, param, direction, variant.unwrap_or(Variant::Derived))
            .map_err(|_| unknown())
    }
}

/// `num / den`, refusing denominators within `DEFAULT_POLE_EPS` of zero.
pub(crate) fn divide(num: Complex, den: Complex, what: &str) -> Result<Complex> {
    if den.norm() < DEFAULT_POLE_EPS {
        return Err(Error::DegenerateCoefficient(format!(
            "{what} vanishes ({den})"
        )));
    }
    Ok(num / den)
}

fn term(coeff: Complex, spec: PhiSpec) -> Term {
    Term { coeff, spec }
}

/// Right-hand side of `rel` at the unshifted point `base`.
pub fn contiguous_rhs(rel: &RelationId, base: &PhiSpec) -> Result<TermList> {
    if base.kind != rel.kind {
        return Err(Error::UnsupportedRelation(format!(
            "relation {rel} applied to a {} spec",
            base.kind
        )));
    }
    let q = base.q.value();
    let one = Complex::new(1.0, 0.0);
    let p = |param| base.get(param);
    let (a, c, x, y) = (p(Param::A), p(Param::C), base.x, base.y);

    let terms = match (rel.param, rel.direction) {
        (Shifted::A, dir) => {
            let b = p(Param::B);
            let cx = divide(a * x * (one - b), one - c, "1 - c")?;
            // second correction: y-step, which also moves x by q
            let (cy, y_shifts): (Complex, Vec<(Param, i64)>) = match rel.kind {
                PhiKind::Phi1 => (
                    divide(a * y * (one - p(Param::Bp)), one - c, "1 - c")?,
                    vec![(Param::Bp, 1), (Param::C, 1), (Param::X, 1)],
                ),
                PhiKind::Phi2 => (
                    divide(a * y * (one - p(Param::Bp)), one - p(Param::Cp), "1 - c'")?,
                    vec![(Param::Bp, 1), (Param::Cp, 1), (Param::X, 1)],
                ),
                PhiKind::Phi4 => (
                    divide(a * y * (one - b), one - p(Param::Cp), "1 - c'")?,
                    vec![(Param::B, 1), (Param::Cp, 1), (Param::X, 1)],
                ),
                PhiKind::Phi3 => unreachable!("validated by RelationId::new"),
            };
            let x_shifts = [(Param::B, 1), (Param::C, 1)];
            match dir {
                Direction::Up => {
                    let with_a = |s: &[(Param, i64)]| {
                        let mut v = vec![(Param::A, 1)];
                        v.extend_from_slice(s);
                        base.scaled(&v)
                    };
                    vec![
                        term(one, base.clone()),
                        term(cx, with_a(&x_shifts)),
                        term(cy, with_a(&y_shifts)),
                    ]
                }
                Direction::Down => vec![
                    term(one, base.clone()),
                    term(-cx / q, base.scaled(&x_shifts)),
                    term(-cy / q, base.scaled(&y_shifts)),
                ],
            }
        }
        (Shifted::B, dir) => {
            let b = p(Param::B);
            let coeff = divide(b * x * (one - a), one - c, "1 - c")?;
            match dir {
                Direction::Up => vec![
                    term(one, base.clone()),
                    term(
                        coeff,
                        base.scaled(&[(Param::A, 1), (Param::B, 1), (Param::C, 1)]),
                    ),
                ],
                Direction::Down => vec![
                    term(one, base.clone()),
                    term(-coeff / q, base.scaled(&[(Param::A, 1), (Param::C, 1)])),
                ],
            }
        }
        (Shifted::C, Direction::Down) => {
            let moved = if rel.c_shift_moves_y() {
                base.scaled(&[(Param::X, 1), (Param::Y, 1)])
            } else {
                base.scaled(&[(Param::X, 1)])
            };
            vec![
                term(divide(c, c - q, "1 - q/c")?, moved),
                term(-divide(q, c - q, "1 - q/c")?, base.clone()),
            ]
        }
        (Shifted::C, Direction::Up) => {
            let moved = if rel.c_shift_moves_y() {
                base.scaled(&[(Param::C, 1), (Param::X, 1), (Param::Y, 1)])
            } else {
                base.scaled(&[(Param::C, 1), (Param::X, 1)])
            };
            vec![term(one - c, base.clone()), term(c, moved)]
        }
    };
    TermList::new(terms)
}

/// Evaluates both sides of `rel` at `base` and returns their relative residual.
pub fn contiguous_residual(rel: &RelationId, base: &PhiSpec, cfg: &EvalConfig) -> Result<Residual> {
    let rhs = contiguous_rhs(rel, base)?;
    let lhs = eval_phi(&rel.lhs(base), cfg)?;
    let rhs = evaluate_term_list(&rhs, cfg)?;
    Ok(Residual::between(lhs.value, rhs.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::QBase;

    fn c(v: f64) -> Complex {
        Complex::new(v, 0.0)
    }

    fn phi1(a: f64, x: f64, y: f64) -> PhiSpec {
        PhiSpec::phi1(
            QBase::real(0.5).unwrap(),
            c(a),
            c(0.2),
            c(0.1),
            c(0.7),
            c(x),
            c(y),
        )
        .unwrap()
    }

    #[test]
    fn catalog_has_twenty_relations() {
        let all = RelationId::all();
        assert_eq!(all.len(), 20);
        assert_eq!(all.iter().filter(|r| r.is_flagged()).count(), 4);
    }

    #[test]
    fn ids_round_trip() {
        for id in RelationId::all() {
            for v in [Variant::Printed, Variant::Derived] {
                let id = id.with_variant(v);
                let parsed: RelationId = id.to_string().parse().unwrap();
                if id.is_flagged() {
                    assert_eq!(parsed, id);
                } else {
                    assert_eq!(parsed.base_id(), id.base_id());
                }
            }
        }
        assert_eq!(
            "phi4.c.up.derived".parse::<RelationId>().unwrap().variant,
            Variant::Derived
        );
        assert!("phi3.a.up".parse::<RelationId>().is_err());
        assert!("phi4.b.down".parse::<RelationId>().is_err());
        assert!("phi1.a.sideways".parse::<RelationId>().is_err());
    }

    #[test]
    fn unsupported_combination() {
        let err = RelationId::new(PhiKind::Phi3, Shifted::A, Direction::Up, Variant::Derived)
            .unwrap_err();
        assert!(matches!(err, Error::UnsupportedRelation(_)));
    }

    #[test]
    fn a_up_structure() {
        let base = phi1(0.3, 0.2, 0.1);
        let rel: RelationId = "phi1.a.up".parse().unwrap();
        let tl = contiguous_rhs(&rel, &base).unwrap();
        assert_eq!(tl.len(), 3);
        let t = tl.terms();
        assert_eq!(t[0].coeff, c(1.0));
        assert!((t[1].coeff - c(0.3 * 0.2 * 0.8 / 0.3)).norm() < 1e-15);
        assert!((t[2].coeff - c(0.3 * 0.1 * 0.9 / 0.3)).norm() < 1e-15);
        assert_eq!(
            t[1].spec,
            base.scaled(&[(Param::A, 1), (Param::B, 1), (Param::C, 1)])
        );
        assert_eq!(
            t[2].spec,
            base.scaled(&[(Param::A, 1), (Param::Bp, 1), (Param::C, 1), (Param::X, 1)])
        );
    }

    #[test]
    fn zero_a_annihilates_corrections() {
        let base = phi1(0.0, 0.2, 0.1);
        let rel: RelationId = "phi1.a.up".parse().unwrap();
        let tl = contiguous_rhs(&rel, &base).unwrap();
        assert_eq!(tl.terms()[1].coeff, c(0.0));
        assert_eq!(tl.terms()[2].coeff, c(0.0));
        let r = contiguous_residual(&rel, &base, &EvalConfig::default()).unwrap();
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn origin_residuals_vanish() {
        let base = phi1(0.3, 0.0, 0.0);
        for name in [
            "phi1.a.up",
            "phi1.a.down",
            "phi1.b.up",
            "phi1.b.down",
            "phi1.c.up",
            "phi1.c.down",
        ] {
            let rel: RelationId = name.parse().unwrap();
            let r = contiguous_residual(&rel, &base, &EvalConfig::default()).unwrap();
            assert!(r.residual <= 1e-14, "{name}: {}", r.residual);
        }
    }

    #[test]
    fn c_down_at_reference_point() {
        let base = phi1(0.3, 0.2, 0.1);
        let rel: RelationId = "phi1.c.down".parse().unwrap();
        let r = contiguous_residual(&rel, &base, &EvalConfig::default()).unwrap();
        assert!(r.residual <= 1e-10, "{}", r.residual);
    }

    #[test]
    fn degenerate_coefficient() {
        let base = PhiSpec::phi1(
            QBase::real(0.5).unwrap(),
            c(0.3),
            c(0.2),
            c(0.1),
            c(1.0),
            c(0.2),
            c(0.1),
        )
        .unwrap();
        let rel: RelationId = "phi1.b.up".parse().unwrap();
        assert!(matches!(
            contiguous_rhs(&rel, &base),
            Err(Error::DegenerateCoefficient(_))
        ));
        let base = base.with(Param::C, c(0.5));
        let rel: RelationId = "phi1.c.down".parse().unwrap();
        assert!(matches!(
            contiguous_rhs(&rel, &base),
            Err(Error::DegenerateCoefficient(_))
        ));
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let rel: RelationId = "phi2.a.up".parse().unwrap();
        assert!(contiguous_rhs(&rel, &phi1(0.3, 0.2, 0.1)).is_err());
    }
}

//! n-step recursion formulas.
//!
//! Sixteen theorems, two formulas each. Theorems come in families: the
//! iterated forms (a single sum over `k`), the closed forms (Gaussian-binomial
//! weighted sums, a double sum over `k, i` for `a`-shifts) and the `c`-shift
//! forms. Iterated and closed forms of the same shift are computed
//! independently so that [`cross_check`] compares two genuinely different
//! routes to one value.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::phi::{eval_phi, EvalConfig, Param, PhiKind, PhiSpec};
use crate::qcore::{binom2, qbinom, qpoch_finite, Complex};
use crate::relations::{divide, split_variant, Direction, RelationId, Shifted, Variant};
use crate::terms::{evaluate_term_list, Residual, Term, TermList};

/// Largest accepted shift order.
pub const MAX_ORDER: u32 = 12;

/// Theorem pairs stating the same shift in iterated and closed form.
pub const CROSS_PAIRS: [(u8, u8); 6] = [(1, 2), (3, 4), (6, 7), (8, 9), (11, 12), (14, 15)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    First,
    Second,
}

impl Formula {
    pub fn number(self) -> u8 {
        match self {
            Formula::First => 1,
            Formula::Second => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    AIterated,
    AClosed,
    BIterated,
    BClosed,
    C,
}

fn shape(theorem: u8) -> (PhiKind, Family) {
    use Family::*;
    use PhiKind::*;
    match theorem {
        1 => (Phi1, AIterated),
        2 => (Phi1, AClosed),
        3 => (Phi1, BIterated),
        4 => (Phi1, BClosed),
        5 => (Phi1, C),
        6 => (Phi2, AIterated),
        7 => (Phi2, AClosed),
        8 => (Phi2, BIterated),
        9 => (Phi2, BClosed),
        10 => (Phi2, C),
        11 => (Phi3, BIterated),
        12 => (Phi3, BClosed),
        13 => (Phi3, C),
        14 => (Phi4, AIterated),
        15 => (Phi4, AClosed),
        16 => (Phi4, C),
        _ => unreachable!("theorem numbers are validated on construction"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TheoremId {
    theorem: u8,
    pub formula: Formula,
    pub variant: Variant,
}

impl TheoremId {
    pub fn new(theorem: u8, formula: Formula, variant: Variant) -> Result<Self> {
        if !(1..=16).contains(&theorem) {
            return Err(Error::UnsupportedRelation(format!("no theorem {theorem}")));
        }
        Ok(TheoremId {
            theorem,
            formula,
            variant,
        })
    }

    /// All 32 formulas, `Derived` variant.
    pub fn all() -> Vec<TheoremId> {
        (1..=16)
            .flat_map(|t| {
                [Formula::First, Formula::Second].map(|f| TheoremId {
                    theorem: t,
                    formula: f,
                    variant: Variant::Derived,
                })
            })
            .collect()
    }

    pub fn theorem(&self) -> u8 {
        self.theorem
    }

    pub fn kind(&self) -> PhiKind {
        shape(self.theorem).0
    }

    fn family(&self) -> Family {
        shape(self.theorem).1
    }

    pub fn shifted(&self) -> Shifted {
        match self.family() {
            Family::AIterated | Family::AClosed => Shifted::A,
            Family::BIterated | Family::BClosed => Shifted::B,
            Family::C => Shifted::C,
        }
    }

    /// `c`-formulas list the downward shift first; all others list the upward one first.
    pub fn direction(&self) -> Direction {
        match (self.family(), self.formula) {
            (Family::C, Formula::First) => Direction::Down,
            (Family::C, Formula::Second) => Direction::Up,
            (_, Formula::First) => Direction::Up,
            (_, Formula::Second) => Direction::Down,
        }
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self.family(), Family::AClosed | Family::BClosed)
    }

    /// Whether the two printings of this formula differ.
    pub fn is_flagged(&self) -> bool {
        (self.family() == Family::C && self.formula == Formula::First)
            || (self.theorem == 16 && self.formula == Formula::Second)
    }

    pub fn with_variant(self, variant: Variant) -> Self {
        TheoremId { variant, ..self }
    }

    /// The single-step relation this formula reduces to at `n = 1`.
    pub fn generating_relation(&self) -> RelationId {
        RelationId::new(self.kind(), self.shifted(), self.direction(), self.variant)
            .expect("every theorem shifts a parameter its kind carries")
    }

    pub fn base_id(&self) -> String {
        format!("thm{}.{}", self.theorem, self.formula.number())
    }

    /// `c`-formulas: whether `y` is rescaled along with `x`.
    fn c_shift_moves_y(&self) -> bool {
        match (self.kind(), self.variant) {
            (PhiKind::Phi1 | PhiKind::Phi3, _) => true,
            (PhiKind::Phi2, _) => false,
            (PhiKind::Phi4, Variant::Derived) => false,
            (PhiKind::Phi4, Variant::Printed) => self.formula == Formula::Second,
        }
    }

    /// Extra power of `q` in the downward `c`-formula.
    fn c_down_exponent_offset(&self) -> i64 {
        match self.variant {
            Variant::Printed => -1,
            Variant::Derived => 0,
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base_id())?;
        if self.is_flagged() {
            write!(f, ".{}", self.variant)?;
        }
        Ok(())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    /// Parses `thm<N>.<1|2>[.printed|.derived]`; a missing suffix means `Derived`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownIdentity(s.to_string());
        let (base, variant) = split_variant(s);
        let rest = base.strip_prefix("thm").ok_or_else(unknown)?;
        let (num, formula) = rest.split_once('.').ok_or_else(unknown)?;
        let theorem: u8 = num.parse().map_err(|_| unknown())?;
        let formula = match formula {
            "1" => Formula::First,
            "2" => Formula::Second,
            _ => return Err(unknown()),
        };
        TheoremId::new(theorem, formula, variant.unwrap_or(Variant::Derived)).map_err(|_| unknown())
    }
}

/// One application of a theorem: which formula, at which point, for which order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftRequest {
    pub id: TheoremId,
    pub base: PhiSpec,
    pub n: u32,
}

impl ShiftRequest {
    pub fn new(id: TheoremId, base: PhiSpec, n: u32) -> Result<Self> {
        if base.kind != id.kind() {
            return Err(Error::UnsupportedRelation(format!(
                "{id} applies to {}, got {}",
                id.kind(),
                base.kind
            )));
        }
        if n > MAX_ORDER {
            return Err(Error::InvalidParameter(format!(
                "order n = {n} exceeds the cap {MAX_ORDER}"
            )));
        }
        Ok(ShiftRequest { id, base, n })
    }

    /// `base` with the theorem's parameter moved by `q^{+-n}`.
    pub fn lhs(&self) -> PhiSpec {
        self.base.scaled(&[(
            self.id.shifted().param(),
            self.id.direction().sign() * i64::from(self.n),
        )])
    }
}

/// Expands the right-hand side of `req` into a term list.
///
/// `n = 0` yields `[(1, base)]` for every formula.
pub fn recursion_rhs(req: &ShiftRequest) -> Result<TermList> {
    let ShiftRequest { id, base, n } = req;
    if base.kind != id.kind() {
        return Err(Error::UnsupportedRelation(format!(
            "{id} applies to {}, got {}",
            id.kind(),
            base.kind
        )));
    }
    if *n > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "order n = {n} exceeds the cap {MAX_ORDER}"
        )));
    }
    if *n == 0 {
        return Ok(TermList::single(base.clone()));
    }
    let n = *n;
    let terms = match (id.family(), id.direction()) {
        (Family::AIterated, dir) => a_iterated(base, n, dir)?,
        (Family::AClosed, dir) => a_closed(base, n, dir)?,
        (Family::BIterated, dir) => b_iterated(base, n, dir)?,
        (Family::BClosed, dir) => b_closed(base, n, dir)?,
        (Family::C, Direction::Down) => c_down(id, base, n)?,
        (Family::C, Direction::Up) => c_up(id, base, n)?,
    };
    TermList::new(terms)
}

fn one() -> Complex {
    Complex::new(1.0, 0.0)
}

type Shifts<const N: usize> = [(Param, i64); N];

/// Parameter moves of the two correction series of an `a`-shift: the `x`-step
/// and the `y`-step (which also carries `x -> xq`).
fn a_step_shifts(kind: PhiKind) -> (Shifts<2>, Shifts<3>) {
    let x_step = [(Param::B, 1), (Param::C, 1)];
    let y_step = match kind {
        PhiKind::Phi1 => [(Param::Bp, 1), (Param::C, 1), (Param::X, 1)],
        PhiKind::Phi2 => [(Param::Bp, 1), (Param::Cp, 1), (Param::X, 1)],
        PhiKind::Phi4 => [(Param::B, 1), (Param::Cp, 1), (Param::X, 1)],
        PhiKind::Phi3 => unreachable!("no a-recursion for Phi3"),
    };
    (x_step, y_step)
}

fn a_iterated(base: &PhiSpec, n: u32, dir: Direction) -> Result<Vec<Term>> {
    let q = base.q;
    let (a, b, c, x, y) = (
        base.get(Param::A),
        base.get(Param::B),
        base.get(Param::C),
        base.x,
        base.y,
    );
    let ax = divide(a * x * (one() - b), one() - c, "1 - c")?;
    let ay = match base.kind {
        PhiKind::Phi1 => divide(a * y * (one() - base.get(Param::Bp)), one() - c, "1 - c")?,
        PhiKind::Phi2 => divide(
            a * y * (one() - base.get(Param::Bp)),
            one() - base.get(Param::Cp),
            "1 - c'",
        )?,
        _ => divide(a * y * (one() - b), one() - base.get(Param::Cp), "1 - c'")?,
    };
    let (x_step, y_step) = a_step_shifts(base.kind);
    let mut out = vec![Term {
        coeff: one(),
        spec: base.clone(),
    }];
    for k in 1..=i64::from(n) {
        let (weight, a_exp) = match dir {
            Direction::Up => (q.pow(k - 1), k),
            Direction::Down => (-q.pow(-k), 1 - k),
        };
        let mut xs = vec![(Param::A, a_exp)];
        xs.extend_from_slice(&x_step);
        let mut ys = vec![(Param::A, a_exp)];
        ys.extend_from_slice(&y_step);
        out.push(Term {
            coeff: ax * weight,
            spec: base.scaled(&xs),
        });
        out.push(Term {
            coeff: ay * weight,
            spec: base.scaled(&ys),
        });
    }
    Ok(out)
}

/// Product of `(z; q)_j` over the denominator, refusing near-zero values.
fn poch_den(z: Complex, base: &PhiSpec, j: i64, what: &str) -> Result<Complex> {
    let v = qpoch_finite(z, base.q, j)?;
    divide(one(), v, what).map(|_| v)
}

fn a_closed(base: &PhiSpec, n: u32, dir: Direction) -> Result<Vec<Term>> {
    let q = base.q;
    let (a, b, x, y) = (base.get(Param::A), base.get(Param::B), base.x, base.y);
    let n64 = i64::from(n);
    let mut out = Vec::with_capacity(((n + 1) * (n + 2) / 2) as usize);
    for k in 0..=n64 {
        for i in 0..=k {
            let gauss = qbinom(n, k, q) * qbinom(k as u32, i, q);
            let (ratio, mut shifts) = match base.kind {
                PhiKind::Phi1 => {
                    let bp = base.get(Param::Bp);
                    let c = base.get(Param::C);
                    let num = qpoch_finite(b, q, k - i)? * qpoch_finite(bp, q, i)?;
                    let den = poch_den(c, base, k, "(c;q)_k")?;
                    (
                        num / den,
                        vec![(Param::B, k - i), (Param::Bp, i), (Param::C, k)],
                    )
                }
                PhiKind::Phi2 => {
                    let bp = base.get(Param::Bp);
                    let num = qpoch_finite(b, q, k - i)? * qpoch_finite(bp, q, i)?;
                    let den = poch_den(base.get(Param::C), base, k - i, "(c;q)_{k-i}")?
                        * poch_den(base.get(Param::Cp), base, i, "(c';q)_i")?;
                    (
                        num / den,
                        vec![
                            (Param::B, k - i),
                            (Param::Bp, i),
                            (Param::C, k - i),
                            (Param::Cp, i),
                        ],
                    )
                }
                PhiKind::Phi4 => {
                    let num = qpoch_finite(b, q, k)?;
                    let den = poch_den(base.get(Param::C), base, k - i, "(c;q)_{k-i}")?
                        * poch_den(base.get(Param::Cp), base, i, "(c';q)_i")?;
                    (
                        num / den,
                        vec![(Param::B, k), (Param::C, k - i), (Param::Cp, i)],
                    )
                }
                PhiKind::Phi3 => unreachable!("no a-recursion for Phi3"),
            };
            let weight = match dir {
                Direction::Up => {
                    shifts.push((Param::A, k));
                    q.pow(2 * binom2(k)) * a.powi(k as i32)
                }
                Direction::Down => q.pow(binom2(k) - n64 * k) * (-a).powi(k as i32),
            };
            shifts.push((Param::X, i));
            let coeff = gauss * ratio * weight * x.powi((k - i) as i32) * y.powi(i as i32);
            out.push(Term {
                coeff,
                spec: base.scaled(&shifts),
            });
        }
    }
    Ok(out)
}

fn b_iterated(base: &PhiSpec, n: u32, dir: Direction) -> Result<Vec<Term>> {
    let q = base.q;
    let (a, b, c, x) = (
        base.get(Param::A),
        base.get(Param::B),
        base.get(Param::C),
        base.x,
    );
    let bx = divide(b * x * (one() - a), one() - c, "1 - c")?;
    let mut out = vec![Term {
        coeff: one(),
        spec: base.clone(),
    }];
    for k in 1..=i64::from(n) {
        let (weight, b_exp) = match dir {
            Direction::Up => (q.pow(k - 1), k),
            Direction::Down => (-q.pow(-k), 1 - k),
        };
        out.push(Term {
            coeff: bx * weight,
            spec: base.scaled(&[(Param::A, 1), (Param::B, b_exp), (Param::C, 1)]),
        });
    }
    Ok(out)
}

fn b_closed(base: &PhiSpec, n: u32, dir: Direction) -> Result<Vec<Term>> {
    let q = base.q;
    let (a, b, c, x) = (
        base.get(Param::A),
        base.get(Param::B),
        base.get(Param::C),
        base.x,
    );
    let n64 = i64::from(n);
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n64 {
        let ratio = qbinom(n, k, q) * qpoch_finite(a, q, k)? / poch_den(c, base, k, "(c;q)_k")?;
        let (weight, shifts) = match dir {
            Direction::Up => (
                q.pow(2 * binom2(k)) * (b * x).powi(k as i32),
                vec![(Param::A, k), (Param::B, k), (Param::C, k)],
            ),
            Direction::Down => (
                q.pow(binom2(k) - n64 * k) * (-b * x).powi(k as i32),
                vec![(Param::A, k), (Param::C, k)],
            ),
        };
        out.push(Term {
            coeff: ratio * weight,
            spec: base.scaled(&shifts),
        });
    }
    Ok(out)
}

fn c_down(id: &TheoremId, base: &PhiSpec, n: u32) -> Result<Vec<Term>> {
    let q = base.q;
    let c = base.get(Param::C);
    let n64 = i64::from(n);
    if c.norm() < crate::qcore::DEFAULT_POLE_EPS {
        return Err(Error::DegenerateCoefficient("c vanishes".into()));
    }
    let prefactor = divide(one(), qpoch_finite(q.value() / c, q, n64)?, "(q/c;q)_n")?;
    let moves_y = id.c_shift_moves_y();
    let offset = id.c_down_exponent_offset();
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n64 {
        let coeff = prefactor
            * qbinom(n, k, q)
            * (-c).powi((k - n64) as i32)
            * q.pow(binom2(n64 + 1 - k) + offset);
        let shifts: &[(Param, i64)] = if moves_y {
            &[(Param::X, k), (Param::Y, k)]
        } else {
            &[(Param::X, k)]
        };
        out.push(Term {
            coeff,
            spec: base.scaled(shifts),
        });
    }
    Ok(out)
}

fn c_up(id: &TheoremId, base: &PhiSpec, n: u32) -> Result<Vec<Term>> {
    let q = base.q;
    let c = base.get(Param::C);
    let n64 = i64::from(n);
    let moves_y = id.c_shift_moves_y();
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n64 {
        let coeff = qbinom(n, k, q)
            * c.powi(k as i32)
            * q.pow(2 * binom2(k))
            * qpoch_finite(c * q.pow(k), q, n64 - k)?;
        let shifts: &[(Param, i64)] = if moves_y {
            &[(Param::C, k), (Param::X, k), (Param::Y, k)]
        } else {
            &[(Param::C, k), (Param::X, k)]
        };
        out.push(Term {
            coeff,
            spec: base.scaled(shifts),
        });
    }
    Ok(out)
}

/// Evaluates the shifted function directly and through the expansion.
pub fn recursion_residual(req: &ShiftRequest, cfg: &EvalConfig) -> Result<Residual> {
    let rhs = recursion_rhs(req)?;
    let lhs = eval_phi(&req.lhs(), cfg)?;
    let rhs = evaluate_term_list(&rhs, cfg)?;
    Ok(Residual::between(lhs.value, rhs.value))
}

/// Compares two expansions of the same shift against each other.
pub fn cross_check(
    pair: (TheoremId, TheoremId),
    base: &PhiSpec,
    n: u32,
    cfg: &EvalConfig,
) -> Result<Residual> {
    let (first, second) = pair;
    if first.kind() != second.kind()
        || first.shifted() != second.shifted()
        || first.direction() != second.direction()
    {
        return Err(Error::UnsupportedRelation(format!(
            "{first} and {second} do not describe the same shift"
        )));
    }
    let left = recursion_rhs(&ShiftRequest::new(first, base.clone(), n)?)?;
    let right = recursion_rhs(&ShiftRequest::new(second, base.clone(), n)?)?;
    let left = evaluate_term_list(&left, cfg)?;
    let right = evaluate_term_list(&right, cfg)?;
    Ok(Residual::between(left.value, right.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::QBase;
    use crate::relations::contiguous_rhs;

    fn c(v: f64) -> Complex {
        Complex::new(v, 0.0)
    }

    fn reference(kind: PhiKind) -> PhiSpec {
        let q = QBase::new(Complex::new(0.45, 0.15)).unwrap();
        let (a, ap, b, bp) = (
            Complex::new(0.3, 0.1),
            Complex::new(-0.2, 0.25),
            Complex::new(0.2, -0.1),
            c(0.1),
        );
        let (cc, cp) = (Complex::new(0.7, 0.2), Complex::new(-0.6, 0.1));
        let (x, y) = (Complex::new(0.2, 0.1), Complex::new(-0.1, 0.15));
        match kind {
            PhiKind::Phi1 => PhiSpec::phi1(q, a, b, bp, cc, x, y),
            PhiKind::Phi2 => PhiSpec::phi2(q, a, b, bp, cc, cp, x, y),
            PhiKind::Phi3 => PhiSpec::phi3(q, a, ap, b, bp, cc, x, y),
            PhiKind::Phi4 => PhiSpec::phi4(q, a, b, cc, cp, x, y),
        }
        .unwrap()
    }

    fn req(id: &str, n: u32) -> ShiftRequest {
        let id: TheoremId = id.parse().unwrap();
        ShiftRequest::new(id, reference(id.kind()), n).unwrap()
    }

    fn value(tl: &TermList) -> Complex {
        evaluate_term_list(tl, &EvalConfig::default())
            .unwrap()
            .value
    }

    #[test]
    fn thirty_two_formulas_nine_flagged_with_relations() {
        let all = TheoremId::all();
        assert_eq!(all.len(), 32);
        let flagged: Vec<String> = all
            .iter()
            .filter(|t| t.is_flagged())
            .map(|t| t.base_id())
            .collect();
        assert_eq!(
            flagged,
            ["thm5.1", "thm10.1", "thm13.1", "thm16.1", "thm16.2"]
        );
    }

    #[test]
    fn term_counts() {
        for id in TheoremId::all() {
            for n in 1..=5u32 {
                let tl = recursion_rhs(&ShiftRequest::new(id, reference(id.kind()), n).unwrap())
                    .unwrap();
                let expect = match (id.shifted(), id.is_closed_form()) {
                    (Shifted::A, true) => ((n + 1) * (n + 2) / 2) as usize,
                    (Shifted::A, false) => 1 + 2 * n as usize,
                    (Shifted::B, false) => 1 + n as usize,
                    _ => n as usize + 1,
                };
                assert_eq!(tl.len(), expect, "{id} n={n}");
            }
        }
    }

    #[test]
    fn order_zero_is_identity() {
        let r = req("thm5.1", 0);
        assert_eq!(recursion_rhs(&r).unwrap(), TermList::single(r.base.clone()));
    }

    #[test]
    fn order_one_reduces_to_generating_relation() {
        for id in TheoremId::all() {
            let r = ShiftRequest::new(id, reference(id.kind()), 1).unwrap();
            let rel = id.generating_relation();
            let from_theorem = recursion_rhs(&r).unwrap();
            let from_relation = contiguous_rhs(&rel, &r.base).unwrap();
            assert!(
                from_theorem.same_structure(&from_relation, 1e-13),
                "{id} vs {rel}"
            );
            assert_eq!(r.lhs(), rel.lhs(&r.base));
        }
    }

    #[test]
    fn closed_b_shift_at_reference_point() {
        let q = QBase::real(0.5).unwrap();
        let base = PhiSpec::phi1(q, c(0.3), c(0.2), c(0.1), c(0.7), c(0.2), c(0.1)).unwrap();
        let r = ShiftRequest::new("thm4.1".parse().unwrap(), base, 3).unwrap();
        let res = recursion_residual(&r, &EvalConfig::default()).unwrap();
        assert!(res.residual <= 1e-9, "{}", res.residual);
        let expected_lhs =
            eval_phi(&r.base.scaled(&[(Param::B, 3)]), &EvalConfig::default()).unwrap();
        assert_eq!(res.lhs, expected_lhs.value);
    }

    #[test]
    fn iterated_a_shift_order_two() {
        let res = recursion_residual(&req("thm1.1", 2), &EvalConfig::default()).unwrap();
        assert!(res.residual <= 1e-9);
    }

    #[test]
    fn order_one_residual_matches_relation_residual() {
        let cfg = EvalConfig::default();
        let r = req("thm1.1", 1);
        let thm = recursion_residual(&r, &cfg).unwrap();
        let rel =
            crate::relations::contiguous_residual(&"phi1.a.up".parse().unwrap(), &r.base, &cfg)
                .unwrap();
        assert!((thm.residual - rel.residual).abs() <= 1e-13);
    }

    #[test]
    fn flagged_printings_fail_and_derivations_hold() {
        let cfg = EvalConfig::default();
        for name in ["thm5.1", "thm10.1", "thm13.1", "thm16.1", "thm16.2"] {
            let derived = recursion_residual(&req(&format!("{name}.derived"), 2), &cfg).unwrap();
            let printed = recursion_residual(&req(&format!("{name}.printed"), 2), &cfg).unwrap();
            assert!(derived.residual <= 1e-9, "{name}: {}", derived.residual);
            assert!(printed.residual >= 1e-3, "{name}: {}", printed.residual);
        }
    }

    #[test]
    fn b_shift_by_repeated_single_steps() {
        // Phi[b q^j] = Phi[b q^{j-1}] + (correction of the one-step formula at b q^{j-1})
        let cfg = EvalConfig::default();
        let id: TheoremId = "thm3.1".parse().unwrap();
        let base = reference(PhiKind::Phi1);
        for n in 1..=4u32 {
            let mut running = eval_phi(&base, &cfg).unwrap().value;
            for j in 0..i64::from(n) {
                let step = recursion_rhs(
                    &ShiftRequest::new(id, base.scaled(&[(Param::B, j)]), 1).unwrap(),
                )
                .unwrap();
                let correction = TermList::new(step.terms()[1..].to_vec()).unwrap();
                running += value(&correction);
            }
            let direct =
                value(&recursion_rhs(&ShiftRequest::new(id, base.clone(), n).unwrap()).unwrap());
            assert!(
                (running - direct).norm() <= 1e-9 * direct.norm().max(1.0),
                "n={n}"
            );
        }
    }

    #[test]
    fn up_then_down_returns_to_base() {
        let cfg = EvalConfig::default();
        let base = reference(PhiKind::Phi1);
        let direct = eval_phi(&base, &cfg).unwrap().value;
        for n in 1..=4u32 {
            let raised = base.scaled(&[(Param::A, i64::from(n))]);
            let down =
                recursion_rhs(&ShiftRequest::new("thm1.2".parse().unwrap(), raised, n).unwrap())
                    .unwrap();
            assert!(
                (value(&down) - direct).norm() <= 1e-8 * direct.norm().max(1.0),
                "n={n}"
            );
        }
    }

    #[test]
    fn cross_pairs_agree() {
        let cfg = EvalConfig::default();
        for (a, b) in CROSS_PAIRS {
            for f in [Formula::First, Formula::Second] {
                let pa = TheoremId::new(a, f, Variant::Derived).unwrap();
                let pb = TheoremId::new(b, f, Variant::Derived).unwrap();
                let n = if a == 1 && f == Formula::First { 1 } else { 3 };
                let r = cross_check((pa, pb), &reference(pa.kind()), n, &cfg).unwrap();
                let tol = if n == 1 { 1e-13 } else { 1e-9 };
                assert!(r.residual <= tol, "{pa} vs {pb}: {}", r.residual);
            }
        }
    }

    #[test]
    fn mismatched_pair_is_rejected() {
        let a: TheoremId = "thm1.1".parse().unwrap();
        let b: TheoremId = "thm2.2".parse().unwrap();
        let err =
            cross_check((a, b), &reference(PhiKind::Phi1), 2, &EvalConfig::default()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedRelation(_)));
    }

    #[test]
    fn request_validation() {
        let id: TheoremId = "thm1.1".parse().unwrap();
        assert!(ShiftRequest::new(id, reference(PhiKind::Phi2), 1).is_err());
        assert!(ShiftRequest::new(id, reference(PhiKind::Phi1), MAX_ORDER + 1).is_err());
        assert!("thm0.1".parse::<TheoremId>().is_err());
        assert!("thm17.2".parse::<TheoremId>().is_err());
        assert_eq!(
            "thm5.1.printed".parse::<TheoremId>().unwrap().to_string(),
            "thm5.1.printed"
        );
        assert_eq!(
            "thm1.1.printed".parse::<TheoremId>().unwrap().to_string(),
            "thm1.1"
        );
    }

    #[test]
    fn degenerate_c_down_prefactor() {
        // c = q makes (q/c; q)_n vanish
        let q = QBase::real(0.5).unwrap();
        let base = PhiSpec::phi1(q, c(0.3), c(0.2), c(0.1), c(0.5), c(0.2), c(0.1)).unwrap();
        let r = ShiftRequest::new("thm5.1".parse().unwrap(), base, 2).unwrap();
        assert!(matches!(
            recursion_rhs(&r),
            Err(Error::DegenerateCoefficient(_))
        ));
    }
}

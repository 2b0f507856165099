//! Direct evaluation of the four q-Appell double series.
//!
//! With `P(z, j) = (z; q)_j`:
//!
//! ```text
//! Phi1[a; b, b'; c; x, y]     = sum P(a,m+n) P(b,m) P(b',n)            / (P(q,m) P(q,n) P(c,m+n))       x^m y^n
//! Phi2[a; b, b'; c, c'; x, y] = sum P(a,m+n) P(b,m) P(b',n)            / (P(q,m) P(q,n) P(c,m) P(c',n)) x^m y^n
//! Phi3[a, a'; b, b'; c; x, y] = sum P(a,m) P(a',n) P(b,m) P(b',n)      / (P(q,m) P(q,n) P(c,m+n))       x^m y^n
//! Phi4[a; b; c, c'; x, y]     = sum P(a,m+n) P(b,m+n)                  / (P(q,m) P(q,n) P(c,m) P(c',n)) x^m y^n
//! ```
//!
//! The sum runs over anti-diagonal layers `m + n = t` in increasing `t`, with
//! `m` ascending inside a layer, so results are bit-for-bit reproducible.

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qcore::{finite, qpoch_finite, Complex, QBase, DEFAULT_POLE_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhiKind {
    Phi1,
    Phi2,
    Phi3,
    Phi4,
}

/// Named slot of a [`PhiSpec`]. `Ap`, `Bp`, `Cp` are the primed parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    A,
    Ap,
    B,
    Bp,
    C,
    Cp,
    X,
    Y,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::A => "a",
            Param::Ap => "ap",
            Param::B => "b",
            Param::Bp => "bp",
            Param::C => "c",
            Param::Cp => "cp",
            Param::X => "x",
            Param::Y => "y",
        }
    }
}

impl PhiKind {
    pub const ALL: [PhiKind; 4] = [PhiKind::Phi1, PhiKind::Phi2, PhiKind::Phi3, PhiKind::Phi4];

    pub fn numerator_params(self) -> &'static [Param] {
        match self {
            PhiKind::Phi1 | PhiKind::Phi2 => &[Param::A, Param::B, Param::Bp],
            PhiKind::Phi3 => &[Param::A, Param::Ap, Param::B, Param::Bp],
            PhiKind::Phi4 => &[Param::A, Param::B],
        }
    }

    pub fn denominator_params(self) -> &'static [Param] {
        match self {
            PhiKind::Phi1 | PhiKind::Phi3 => &[Param::C],
            PhiKind::Phi2 | PhiKind::Phi4 => &[Param::C, Param::Cp],
        }
    }

    pub fn index(self) -> u8 {
        match self {
            PhiKind::Phi1 => 1,
            PhiKind::Phi2 => 2,
            PhiKind::Phi3 => 3,
            PhiKind::Phi4 => 4,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(PhiKind::Phi1),
            2 => Some(PhiKind::Phi2),
            3 => Some(PhiKind::Phi3),
            4 => Some(PhiKind::Phi4),
            _ => None,
        }
    }
}

impl fmt::Display for PhiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi{}", self.index())
    }
}

impl FromStr for PhiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.strip_prefix("phi")
            .and_then(|d| d.parse::<u8>().ok())
            .and_then(PhiKind::from_index)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown function kind `{s}`")))
    }
}

impl Serialize for PhiKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// One fully specified q-Appell function value: kind, base, parameters and arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSpec {
    pub kind: PhiKind,
    pub q: QBase,
    pub numerators: Vec<Complex>,
    pub denominators: Vec<Complex>,
    pub x: Complex,
    pub y: Complex,
}

impl PhiSpec {
    pub fn new(
        kind: PhiKind,
        q: QBase,
        numerators: Vec<Complex>,
        denominators: Vec<Complex>,
        x: Complex,
        y: Complex,
    ) -> Result<Self> {
        if numerators.len() != kind.numerator_params().len()
            || denominators.len() != kind.denominator_params().len()
        {
            return Err(Error::InvalidParameter(format!(
                "{kind} takes {} numerator and {} denominator parameters, got {} and {}",
                kind.numerator_params().len(),
                kind.denominator_params().len(),
                numerators.len(),
                denominators.len()
            )));
        }
        for (z, p) in numerators.iter().zip(kind.numerator_params()) {
            finite(*z, p.name())?;
        }
        for (z, p) in denominators.iter().zip(kind.denominator_params()) {
            finite(*z, p.name())?;
        }
        finite(x, "x")?;
        finite(y, "y")?;
        Ok(PhiSpec {
            kind,
            q,
            numerators,
            denominators,
            x,
            y,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn phi1(
        q: QBase,
        a: Complex,
        b: Complex,
        bp: Complex,
        c: Complex,
        x: Complex,
        y: Complex,
    ) -> Result<Self> {
        Self::new(PhiKind::Phi1, q, vec![a, b, bp], vec![c], x, y)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn phi2(
        q: QBase,
        a: Complex,
        b: Complex,
        bp: Complex,
        c: Complex,
        cp: Complex,
        x: Complex,
        y: Complex,
    ) -> Result<Self> {
        Self::new(PhiKind::Phi2, q, vec![a, b, bp], vec![c, cp], x, y)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn phi3(
        q: QBase,
        a: Complex,
        ap: Complex,
        b: Complex,
        bp: Complex,
        c: Complex,
        x: Complex,
        y: Complex,
    ) -> Result<Self> {
        Self::new(PhiKind::Phi3, q, vec![a, ap, b, bp], vec![c], x, y)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn phi4(
        q: QBase,
        a: Complex,
        b: Complex,
        c: Complex,
        cp: Complex,
        x: Complex,
        y: Complex,
    ) -> Result<Self> {
        Self::new(PhiKind::Phi4, q, vec![a, b], vec![c, cp], x, y)
    }

    /// Builds a spec from named values; every parameter of `kind` must be present
    /// and no other parameter may be.
    pub fn from_named(
        kind: PhiKind,
        q: QBase,
        named: &[(Param, Complex)],
        x: Complex,
        y: Complex,
    ) -> Result<Self> {
        let lookup = |p: Param| {
            named
                .iter()
                .find(|(n, _)| *n == p)
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("{kind} requires parameter `{}`", p.name()))
                })
        };
        for (p, _) in named {
            if !kind.numerator_params().contains(p) && !kind.denominator_params().contains(p) {
                return Err(Error::InvalidParameter(format!(
                    "{kind} has no parameter `{}`",
                    p.name()
                )));
            }
        }
        let numerators = kind
            .numerator_params()
            .iter()
            .map(|p| lookup(*p))
            .collect::<Result<Vec<_>>>()?;
        let denominators = kind
            .denominator_params()
            .iter()
            .map(|p| lookup(*p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(kind, q, numerators, denominators, x, y)
    }

    fn slot(&self, p: Param) -> Option<(bool, usize)> {
        match p {
            Param::X | Param::Y => None,
            _ => {
                if let Some(i) = self.kind.numerator_params().iter().position(|&n| n == p) {
                    Some((true, i))
                } else {
                    self.kind
                        .denominator_params()
                        .iter()
                        .position(|&d| d == p)
                        .map(|i| (false, i))
                }
            }
        }
    }

    pub fn has(&self, p: Param) -> bool {
        matches!(p, Param::X | Param::Y) || self.slot(p).is_some()
    }

    pub fn try_get(&self, p: Param) -> Option<Complex> {
        match p {
            Param::X => Some(self.x),
            Param::Y => Some(self.y),
            _ => self.slot(p).map(|(num, i)| {
                if num {
                    self.numerators[i]
                } else {
                    self.denominators[i]
                }
            }),
        }
    }

    /// Value of a parameter this kind is known to carry.
    ///
    /// Panics if `p` is not a parameter of `self.kind`.
    pub fn get(&self, p: Param) -> Complex {
        self.try_get(p)
            .unwrap_or_else(|| panic!("{} has no parameter `{}`", self.kind, p.name()))
    }

    pub fn with(&self, p: Param, value: Complex) -> Self {
        let mut out = self.clone();
        match p {
            Param::X => out.x = value,
            Param::Y => out.y = value,
            _ => {
                let (num, i) = self
                    .slot(p)
                    .unwrap_or_else(|| panic!("{} has no parameter `{}`", self.kind, p.name()));
                if num {
                    out.numerators[i] = value;
                } else {
                    out.denominators[i] = value;
                }
            }
        }
        out
    }

    /// Copy with each listed parameter multiplied by `q^e`.
    pub fn scaled(&self, shifts: &[(Param, i64)]) -> Self {
        let mut out = self.clone();
        for &(p, e) in shifts {
            if e != 0 {
                out = out.with(p, out.get(p) * self.q.pow(e));
            }
        }
        out
    }

    /// Index-swapped spec: exchanging the two summation indices maps the function onto itself.
    pub fn swapped(&self) -> Self {
        let mut out = self.clone();
        match self.kind {
            PhiKind::Phi1 => out.numerators.swap(1, 2),
            PhiKind::Phi2 => {
                out.numerators.swap(1, 2);
                out.denominators.swap(0, 1);
            }
            PhiKind::Phi3 => {
                out.numerators.swap(0, 1);
                out.numerators.swap(2, 3);
            }
            PhiKind::Phi4 => out.denominators.swap(0, 1),
        }
        std::mem::swap(&mut out.x, &mut out.y);
        out
    }
}

fn pair(z: Complex) -> [f64; 2] {
    [z.re, z.im]
}

impl Serialize for PhiSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PhiSpec", 6)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("q", &pair(self.q.value()))?;
        st.serialize_field(
            "numerators",
            &self.numerators.iter().map(|z| pair(*z)).collect::<Vec<_>>(),
        )?;
        st.serialize_field(
            "denominators",
            &self
                .denominators
                .iter()
                .map(|z| pair(*z))
                .collect::<Vec<_>>(),
        )?;
        st.serialize_field("x", &pair(self.x))?;
        st.serialize_field("y", &pair(self.y))?;
        st.end()
    }
}

/// Truncation controls for [`eval_phi`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Target absolute size of the last three summed layers.
    pub tol: f64,
    pub max_layers: usize,
    pub pole_eps: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            tol: 1e-13,
            max_layers: 500,
            pole_eps: DEFAULT_POLE_EPS,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_layers < 1 {
            return Err(Error::InvalidParameter(
                "max_layers must be at least 1".into(),
            ));
        }
        if !(self.pole_eps.is_finite() && self.pole_eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pole_eps must be positive, got {}",
                self.pole_eps
            )));
        }
        Ok(())
    }
}

/// A truncated series value with its truncation order and estimated tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    #[serde(serialize_with = "ser_complex")]
    pub value: Complex,
    pub layers_used: usize,
    pub tail_bound: f64,
}

pub(crate) fn ser_complex<S: Serializer>(
    z: &Complex,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    pair(*z).serialize(s)
}

/// Prefix products `(z; q)_j`, grown on demand.
struct PochTable {
    q: Complex,
    zq: Complex,
    vals: Vec<Complex>,
}

impl PochTable {
    fn new(z: Complex, q: QBase) -> Self {
        PochTable {
            q: q.value(),
            zq: z,
            vals: vec![Complex::new(1.0, 0.0)],
        }
    }

    fn extend_to(&mut self, j: usize) {
        while self.vals.len() <= j {
            let last = *self.vals.last().unwrap();
            self.vals.push(last * (1.0 - self.zq));
            self.zq *= self.q;
        }
    }
}

struct Powers {
    base: Complex,
    vals: Vec<Complex>,
}

impl Powers {
    fn new(base: Complex) -> Self {
        Powers {
            base,
            vals: vec![Complex::new(1.0, 0.0)],
        }
    }

    fn extend_to(&mut self, j: usize) {
        while self.vals.len() <= j {
            let last = *self.vals.last().unwrap();
            self.vals.push(last * self.base);
        }
    }
}

fn check_domain(spec: &PhiSpec) -> Result<()> {
    if spec.x.norm() >= 1.0 || spec.y.norm() >= 1.0 {
        return Err(Error::DomainError(format!(
            "need |x| < 1 and |y| < 1, got |x| = {}, |y| = {}",
            spec.x.norm(),
            spec.y.norm()
        )));
    }
    Ok(())
}

fn check_poles(spec: &PhiSpec, upto: usize, pole_eps: f64) -> Result<()> {
    for (d, p) in spec.denominators.iter().zip(spec.kind.denominator_params()) {
        let mut dq = *d;
        for j in 0..=upto {
            if (1.0 - dq).norm() < pole_eps {
                return Err(Error::DegenerateDenominator(format!(
                    "{} = {d} is within {pole_eps:e} of q^-{j}",
                    p.name()
                )));
            }
            dq *= spec.q.value();
        }
    }
    Ok(())
}

/// Evaluates `spec` by summing anti-diagonal layers until three consecutive
/// layers have every term below `cfg.tol`.
pub fn eval_phi(spec: &PhiSpec, cfg: &EvalConfig) -> Result<SeriesValue> {
    cfg.validate()?;
    check_domain(spec)?;
    check_poles(spec, cfg.max_layers, cfg.pole_eps)?;

    let q = spec.q;
    let mut qq = PochTable::new(q.value(), q);
    let mut nums: Vec<PochTable> = spec
        .numerators
        .iter()
        .map(|z| PochTable::new(*z, q))
        .collect();
    let mut dens: Vec<PochTable> = spec
        .denominators
        .iter()
        .map(|z| PochTable::new(*z, q))
        .collect();
    let mut xp = Powers::new(spec.x);
    let mut yp = Powers::new(spec.y);

    let mut total = Complex::new(0.0, 0.0);
    let mut quiet = 0usize;
    let mut layer_max = 0.0f64;
    for t in 0..=cfg.max_layers {
        qq.extend_to(t);
        nums.iter_mut().for_each(|p| p.extend_to(t));
        dens.iter_mut().for_each(|p| p.extend_to(t));
        xp.extend_to(t);
        yp.extend_to(t);

        let mut layer_sum = Complex::new(0.0, 0.0);
        layer_max = 0.0;
        for m in 0..=t {
            let n = t - m;
            let ratio = match spec.kind {
                PhiKind::Phi1 => {
                    nums[0].vals[t] * nums[1].vals[m] * nums[2].vals[n]
                        / (qq.vals[m] * qq.vals[n] * dens[0].vals[t])
                }
                PhiKind::Phi2 => {
                    nums[0].vals[t] * nums[1].vals[m] * nums[2].vals[n]
                        / (qq.vals[m] * qq.vals[n] * dens[0].vals[m] * dens[1].vals[n])
                }
                PhiKind::Phi3 => {
                    nums[0].vals[m] * nums[1].vals[n] * nums[2].vals[m] * nums[3].vals[n]
                        / (qq.vals[m] * qq.vals[n] * dens[0].vals[t])
                }
                PhiKind::Phi4 => {
                    nums[0].vals[t] * nums[1].vals[t]
                        / (qq.vals[m] * qq.vals[n] * dens[0].vals[m] * dens[1].vals[n])
                }
            };
            let term = ratio * xp.vals[m] * yp.vals[n];
            layer_max = layer_max.max(term.norm());
            layer_sum += term;
        }
        total += layer_sum;
        finite(total, "series partial sum")?;

        quiet = if layer_max < cfg.tol { quiet + 1 } else { 0 };
        if quiet >= 3 {
            let rho = spec.x.norm().max(spec.y.norm()).max(q.modulus());
            let tail_bound = layer_max * rho / ((1.0 - rho) * (1.0 - rho));
            return Ok(SeriesValue {
                value: total,
                layers_used: t,
                tail_bound,
            });
        }
    }
    Err(Error::NoConvergence {
        max_layers: cfg.max_layers,
        last_max: layer_max,
    })
}

/// The `(m, n)` summand of `spec`, computed from [`qpoch_finite`] calls.
pub fn term(spec: &PhiSpec, m: u32, n: u32) -> Result<Complex> {
    check_poles(spec, (m + n) as usize, DEFAULT_POLE_EPS)?;
    let q = spec.q;
    let (mi, ni) = (i64::from(m), i64::from(n));
    let t = mi + ni;
    let p = |z: Complex, j: i64| qpoch_finite(z, q, j);
    let num = &spec.numerators;
    let den = &spec.denominators;
    let ratio = match spec.kind {
        PhiKind::Phi1 => {
            p(num[0], t)? * p(num[1], mi)? * p(num[2], ni)?
                / (p(q.value(), mi)? * p(q.value(), ni)? * p(den[0], t)?)
        }
        PhiKind::Phi2 => {
            p(num[0], t)? * p(num[1], mi)? * p(num[2], ni)?
                / (p(q.value(), mi)? * p(q.value(), ni)? * p(den[0], mi)? * p(den[1], ni)?)
        }
        PhiKind::Phi3 => {
            p(num[0], mi)? * p(num[1], ni)? * p(num[2], mi)? * p(num[3], ni)?
                / (p(q.value(), mi)? * p(q.value(), ni)? * p(den[0], t)?)
        }
        PhiKind::Phi4 => {
            p(num[0], t)? * p(num[1], t)?
                / (p(q.value(), mi)? * p(q.value(), ni)? * p(den[0], mi)? * p(den[1], ni)?)
        }
    };
    finite(
        ratio * spec.x.powi(m as i32) * spec.y.powi(n as i32),
        "term",
    )
}

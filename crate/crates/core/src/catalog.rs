//! Identity IDs, their source anchors, and parsing of check requests.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::recursions::{Formula, TheoremId, CROSS_PAIRS};
use crate::relations::{split_variant, RelationId, Variant};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub id: String,
    pub paper_ref: String,
    pub flagged: bool,
}

fn relation_anchor(id: &str) -> &'static str {
    match id {
        "phi1.a.up" => "Eq. (3)",
        "phi1.a.down" => "Eq. (4)",
        "phi1.b.up" => "Eq. (10)",
        "phi1.b.down" => "Eq. (11)",
        "phi1.c.up" => "Sec. 1, relation after Eq. (16) (c -> cq)",
        "phi1.c.down" => "Eq. (16)",
        "phi2.a.up" | "phi2.a.down" => "Sec. 2, a-contiguous relations (before Theorem 6)",
        "phi2.b.up" | "phi2.b.down" => "Sec. 2, b-contiguous relations (before Theorem 8)",
        "phi2.c.up" | "phi2.c.down" => "Sec. 2, c-contiguous relations (after Theorem 10)",
        "phi3.b.up" | "phi3.b.down" => "Sec. 3, b-contiguous relations (before Theorem 11)",
        "phi3.c.up" | "phi3.c.down" => "Sec. 3, c-contiguous relations (after Theorem 13)",
        "phi4.a.up" | "phi4.a.down" => "Sec. 4, a-contiguous relations (before Theorem 14)",
        "phi4.c.up" | "phi4.c.down" => "Sec. 4, c-contiguous relations (before Theorem 16)",
        _ => unreachable!("every catalog relation has an anchor"),
    }
}

fn theorem_anchor(id: &TheoremId) -> String {
    let eq = match (id.theorem(), id.formula) {
        (1, f) => Some(if f == Formula::First { 1 } else { 2 }),
        (2, f) => Some(if f == Formula::First { 5 } else { 6 }),
        (3, f) => Some(if f == Formula::First { 8 } else { 9 }),
        (4, f) => Some(if f == Formula::First { 12 } else { 13 }),
        (5, f) => Some(if f == Formula::First { 14 } else { 15 }),
        _ => None,
    };
    match eq {
        Some(e) => format!("Theorem {}, Eq. ({e})", id.theorem()),
        None => {
            let which = if id.formula == Formula::First {
                "first"
            } else {
                "second"
            };
            format!("Theorem {}, {which} formula", id.theorem())
        }
    }
}

/// The 52 identities: 20 contiguous relations followed by 32 recursion formulas.
pub fn catalog() -> Vec<CatalogEntry> {
    let relations = RelationId::all().into_iter().map(|r| CatalogEntry {
        id: r.base_id(),
        paper_ref: relation_anchor(&r.base_id()).to_string(),
        flagged: r.is_flagged(),
    });
    let theorems = TheoremId::all().into_iter().map(|t| CatalogEntry {
        id: t.base_id(),
        paper_ref: theorem_anchor(&t),
        flagged: t.is_flagged(),
    });
    relations.chain(theorems).collect()
}

/// Cross-check IDs `cross<A>-<B>.<1|2>`, one per pair and formula.
pub fn cross_ids() -> Vec<String> {
    CROSS_PAIRS
        .iter()
        .flat_map(|(a, b)| [1, 2].map(|f| format!("cross{a}-{b}.{f}")))
        .collect()
}

/// Every ID that `all` expands to.
pub fn all_identity_ids() -> Vec<String> {
    catalog()
        .into_iter()
        .map(|e| e.id)
        .chain(cross_ids())
        .collect()
}

/// What to check, independent of the order `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKey {
    Contiguous(RelationId),
    Recursion(TheoremId),
    Cross(TheoremId, TheoremId),
}

/// A parsed identity string. `variant` is `Some` only when a suffix was given.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityRequest {
    pub key: CheckKey,
    pub variant: Option<Variant>,
}

impl IdentityRequest {
    pub fn is_flagged(&self) -> bool {
        match self.key {
            CheckKey::Contiguous(r) => r.is_flagged(),
            CheckKey::Recursion(t) => t.is_flagged(),
            CheckKey::Cross(..) => false,
        }
    }

    /// Flagged identity requested without a suffix: run both printings.
    pub fn adjudicate(&self) -> bool {
        self.is_flagged() && self.variant.is_none()
    }

    pub fn group_label(&self) -> String {
        match self.key {
            CheckKey::Contiguous(r) => r.base_id(),
            CheckKey::Recursion(t) => t.base_id(),
            CheckKey::Cross(a, b) => format!(
                "cross{}-{}.{}",
                a.theorem(),
                b.theorem(),
                a.formula.number()
            ),
        }
    }

    pub fn label(&self) -> String {
        match (self.is_flagged(), self.variant) {
            (true, Some(v)) => format!("{}.{v}", self.group_label()),
            _ => self.group_label(),
        }
    }
}

fn parse_cross(s: &str) -> Option<(TheoremId, TheoremId)> {
    let rest = s.strip_prefix("cross")?;
    let (pair, formula) = rest.split_once('.')?;
    let (a, b) = pair.split_once('-')?;
    let (a, b): (u8, u8) = (a.parse().ok()?, b.parse().ok()?);
    if !CROSS_PAIRS.contains(&(a, b)) {
        return None;
    }
    let formula = match formula {
        "1" => Formula::First,
        "2" => Formula::Second,
        _ => return None,
    };
    Some((
        TheoremId::new(a, formula, Variant::Derived).ok()?,
        TheoremId::new(b, formula, Variant::Derived).ok()?,
    ))
}

/// Parses one identity string; `all` expands to the full catalog plus cross-checks.
pub fn parse_identity(s: &str) -> Result<Vec<IdentityRequest>> {
    if s == "all" {
        return all_identity_ids().iter().map(|id| parse_one(id)).collect();
    }
    parse_one(s).map(|r| vec![r])
}

fn parse_one(s: &str) -> Result<IdentityRequest> {
    let (_, variant) = split_variant(s);
    let key = if s.starts_with("phi") {
        CheckKey::Contiguous(s.parse()?)
    } else if s.starts_with("thm") {
        CheckKey::Recursion(s.parse()?)
    } else if variant.is_none() {
        let (a, b) = parse_cross(s).ok_or_else(|| Error::UnknownIdentity(s.to_string()))?;
        CheckKey::Cross(a, b)
    } else {
        return Err(Error::UnknownIdentity(s.to_string()));
    };
    Ok(IdentityRequest { key, variant })
}

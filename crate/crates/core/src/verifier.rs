//! Seeded sampling of parameter points and batch residual checks over the
//! identity catalog.
//!
//! Sample `i` for kind `k` is drawn from a ChaCha8 stream keyed by
//! `(seed, k)` with stream number `i`, so every sample is reproducible on its
//! own and independent of how many others are drawn or in which order.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{parse_identity, CheckKey, IdentityRequest};
use crate::error::{Error, Result};
use crate::phi::{EvalConfig, Param, PhiKind, PhiSpec};
use crate::qcore::{Complex, QBase};
use crate::recursions::{cross_check, recursion_residual, ShiftRequest, TheoremId, MAX_ORDER};
use crate::relations::{contiguous_residual, RelationId, Variant};
use crate::terms::Residual;

/// Region from which parameter points are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleDomain {
    pub q_modulus_range: (f64, f64),
    pub q_complex: bool,
    pub param_modulus_max: f64,
    pub arg_modulus_max: f64,
    pub pole_margin: f64,
    pub seed: u64,
}

impl Default for SampleDomain {
    fn default() -> Self {
        SampleDomain {
            q_modulus_range: (0.1, 0.8),
            q_complex: true,
            param_modulus_max: 0.9,
            arg_modulus_max: 0.4,
            pole_margin: 0.05,
            seed: 0,
        }
    }
}

impl SampleDomain {
    pub fn with_seed(seed: u64) -> Self {
        SampleDomain {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.q_modulus_range;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "q modulus range ({lo}, {hi}) must lie in (0, 1)"
            )));
        }
        if !(self.arg_modulus_max > 0.0 && self.arg_modulus_max < 1.0) {
            return Err(Error::InvalidParameter(
                "argument modulus bound must lie in (0, 1)".into(),
            ));
        }
        if !(self.param_modulus_max > 0.0 && self.pole_margin > 0.0) {
            return Err(Error::InvalidParameter(
                "parameter bound and pole margin must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Whether `spec` respects every pole constraint of this domain.
    pub fn admits(&self, spec: &PhiSpec) -> bool {
        let q = spec.q;
        let margin = self.pole_margin;
        let one = Complex::new(1.0, 0.0);
        for p in [Param::A, Param::Ap, Param::B, Param::Bp] {
            if let Some(v) = spec.try_get(p) {
                if (one - v).norm() < margin {
                    return false;
                }
            }
        }
        for p in [Param::C, Param::Cp] {
            if let Some(v) = spec.try_get(p) {
                // c q^j stays away from 1 for the upward direction
                let mut vq = v;
                for _ in 0..=40 {
                    if (vq - one).norm() < margin {
                        return false;
                    }
                    vq *= q.value();
                }
                // and c stays away from q^j so that c q^-n keeps clear of the poles
                if p == Param::C {
                    if v.norm() < margin {
                        return false;
                    }
                    for j in 1..=i64::from(MAX_ORDER) {
                        if (v - q.pow(j)).norm() < margin {
                            return false;
                        }
                    }
                }
            }
        }
        spec.x.norm() <= self.arg_modulus_max && spec.y.norm() <= self.arg_modulus_max
    }
}

fn kind_key(kind: PhiKind) -> u64 {
    u64::from(kind.index()).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn in_disk(rng: &mut ChaCha8Rng, radius: f64) -> Complex {
    let r = radius * rng.gen::<f64>().sqrt();
    Complex::from_polar(r, rng.gen_range(-PI..PI))
}

/// Deterministic sample `index` of `kind` in `dom`.
pub fn sample_point(kind: PhiKind, dom: &SampleDomain, index: u64) -> PhiSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(dom.seed ^ kind_key(kind));
    rng.set_stream(index);
    let (lo, hi) = dom.q_modulus_range;
    loop {
        let r = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let q = if dom.q_complex {
            Complex::from_polar(r, rng.gen_range(-PI..PI))
        } else {
            Complex::new(r, 0.0)
        };
        let q = QBase::new(q).expect("modulus range lies inside (0, 1)");
        let numerators = (0..kind.numerator_params().len())
            .map(|_| in_disk(&mut rng, dom.param_modulus_max))
            .collect();
        let denominators = (0..kind.denominator_params().len())
            .map(|_| in_disk(&mut rng, dom.param_modulus_max))
            .collect();
        let x = in_disk(&mut rng, dom.arg_modulus_max);
        let y = in_disk(&mut rng, dom.arg_modulus_max);
        let spec =
            PhiSpec::new(kind, q, numerators, denominators, x, y).expect("arity matches kind");
        if dom.admits(&spec) {
            return spec;
        }
    }
}

/// A sample whose residual exceeded the threshold or whose evaluation failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub sample: u64,
    pub parameters: PhiSpec,
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Adjudication {
    /// The one variant that passed, if exactly one did.
    pub winner: Option<Variant>,
    pub losing_max_residual: Option<f64>,
}

impl Serialize for Variant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.suffix())
    }
}

/// Aggregate residuals of one identity over a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub identity: String,
    pub samples: u64,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub failures: Vec<Failure>,
    pub variant_adjudication: Option<Adjudication>,
    #[serde(skip)]
    group: String,
    #[serde(skip)]
    flagged: bool,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        match &self.variant_adjudication {
            Some(adj) => adj.winner.is_some(),
            None => self.failures.is_empty(),
        }
    }
}

/// Everything `run_suite` needs besides the identity list.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub domain: SampleDomain,
    pub samples_per_identity: u64,
    pub n_values: Vec<u32>,
    pub threshold: f64,
    pub eval: EvalConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            domain: SampleDomain::default(),
            samples_per_identity: 50,
            n_values: vec![1, 2, 3, 4],
            threshold: 1e-8,
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SuiteOutcome {
    pub reports: Vec<ResidualReport>,
}

impl SuiteOutcome {
    /// Unflagged identities must pass outright; each flagged identity (per `n`)
    /// must have exactly one passing variant among those requested.
    pub fn success(&self) -> bool {
        let mut groups: BTreeMap<&str, (bool, usize, usize)> = BTreeMap::new();
        for r in &self.reports {
            let e = groups.entry(r.group.as_str()).or_insert((r.flagged, 0, 0));
            e.1 += 1;
            if r.passed() {
                e.2 += 1;
            }
        }
        groups.values().all(|&(flagged, total, passed)| {
            if flagged {
                passed == 1
            } else {
                passed == total
            }
        })
    }
}

/// One concrete check at one order.
#[derive(Debug, Clone, Copy)]
enum Job {
    Contiguous(RelationId),
    Recursion(TheoremId, u32),
    Cross(TheoremId, TheoremId, u32),
}

impl Job {
    fn kind(&self) -> PhiKind {
        match self {
            Job::Contiguous(r) => r.kind,
            Job::Recursion(t, _) | Job::Cross(t, _, _) => t.kind(),
        }
    }

    fn with_variant(self, v: Variant) -> Job {
        match self {
            Job::Contiguous(r) => Job::Contiguous(r.with_variant(v)),
            Job::Recursion(t, n) => Job::Recursion(t.with_variant(v), n),
            other => other,
        }
    }

    fn run(&self, base: &PhiSpec, cfg: &EvalConfig) -> Result<Residual> {
        match *self {
            Job::Contiguous(rel) => contiguous_residual(&rel, base, cfg),
            Job::Recursion(id, n) => {
                recursion_residual(&ShiftRequest::new(id, base.clone(), n)?, cfg)
            }
            Job::Cross(a, b, n) => cross_check((a, b), base, n, cfg),
        }
    }
}

struct Sweep {
    max: f64,
    mean: f64,
    failures: Vec<Failure>,
}

fn sweep(job: Job, cfg: &SuiteConfig) -> Sweep {
    let kind = job.kind();
    let outcomes: Vec<(u64, PhiSpec, Result<Residual>)> = (0..cfg.samples_per_identity)
        .into_par_iter()
        .map(|i| {
            let base = sample_point(kind, &cfg.domain, i);
            let r = job.run(&base, &cfg.eval);
            (i, base, r)
        })
        .collect();
    let mut max = 0.0f64;
    let mut sum = 0.0;
    let mut ok = 0usize;
    let mut failures = Vec::new();
    for (sample, parameters, r) in outcomes {
        match r {
            Ok(res) if res.residual.is_finite() => {
                max = max.max(res.residual);
                sum += res.residual;
                ok += 1;
                if res.residual > cfg.threshold {
                    failures.push(Failure {
                        sample,
                        parameters,
                        residual: Some(res.residual),
                        error: None,
                    });
                }
            }
            Ok(res) => failures.push(Failure {
                sample,
                parameters,
                residual: None,
                error: Some(format!("non-finite residual {}", res.residual)),
            }),
            Err(e) => failures.push(Failure {
                sample,
                parameters,
                residual: None,
                error: Some(e.to_string()),
            }),
        }
    }
    Sweep {
        max,
        mean: if ok > 0 { sum / ok as f64 } else { 0.0 },
        failures,
    }
}

fn report(label: String, group: String, flagged: bool, s: Sweep, samples: u64) -> ResidualReport {
    ResidualReport {
        identity: label,
        samples,
        max_residual: s.max,
        mean_residual: s.mean,
        failures: s.failures,
        variant_adjudication: None,
        group,
        flagged,
    }
}

fn expand_jobs(req: &IdentityRequest, n_values: &[u32]) -> Vec<(Job, String, String)> {
    let with_n = |label: String, n: u32| format!("{label}@n={n}");
    match req.key {
        CheckKey::Contiguous(rel) => {
            vec![(Job::Contiguous(rel), req.label(), req.group_label())]
        }
        CheckKey::Recursion(id) => n_values
            .iter()
            .map(|&n| {
                (
                    Job::Recursion(id, n),
                    with_n(req.label(), n),
                    with_n(req.group_label(), n),
                )
            })
            .collect(),
        CheckKey::Cross(a, b) => n_values
            .iter()
            .map(|&n| {
                (
                    Job::Cross(a, b, n),
                    with_n(req.label(), n),
                    with_n(req.group_label(), n),
                )
            })
            .collect(),
    }
}

/// Checks every requested identity over `cfg.samples_per_identity` samples.
///
/// Identity strings are catalog IDs or `all`. Evaluation errors become
/// failures of the affected sample; unknown IDs abort with
/// [`Error::UnknownIdentity`].
pub fn run_suite(identities: &[String], cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    cfg.domain.validate()?;
    cfg.eval.validate()?;
    if cfg.n_values.iter().any(|&n| n == 0 || n > MAX_ORDER) {
        return Err(Error::InvalidParameter(format!(
            "orders must lie in 1..={MAX_ORDER}"
        )));
    }
    let mut requests: Vec<IdentityRequest> = Vec::new();
    for id in identities {
        for req in parse_identity(id)? {
            if !requests.contains(&req) {
                requests.push(req);
            }
        }
    }

    let mut reports = Vec::new();
    for req in &requests {
        for (job, label, group) in expand_jobs(req, &cfg.n_values) {
            if req.adjudicate() {
                let printed = sweep(job.with_variant(Variant::Printed), cfg);
                let derived = sweep(job.with_variant(Variant::Derived), cfg);
                let (p_ok, d_ok) = (printed.failures.is_empty(), derived.failures.is_empty());
                let (winner, shown, losing) = match (p_ok, d_ok) {
                    (true, false) => (Some(Variant::Printed), printed, Some(derived.max)),
                    (false, true) => (Some(Variant::Derived), derived, Some(printed.max)),
                    _ => (None, derived, None),
                };
                let mut r = report(label, group, true, shown, cfg.samples_per_identity);
                r.variant_adjudication = Some(Adjudication {
                    winner,
                    losing_max_residual: losing,
                });
                reports.push(r);
            } else {
                let s = sweep(job, cfg);
                reports.push(report(
                    label,
                    group,
                    req.is_flagged(),
                    s,
                    cfg.samples_per_identity,
                ));
            }
        }
    }
    Ok(SuiteOutcome { reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(samples: u64, n_values: Vec<u32>) -> SuiteConfig {
        SuiteConfig {
            domain: SampleDomain::with_seed(7),
            samples_per_identity: samples,
            n_values,
            ..SuiteConfig::default()
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let dom = SampleDomain::with_seed(42);
        for kind in PhiKind::ALL {
            assert_eq!(sample_point(kind, &dom, 0), sample_point(kind, &dom, 0));
            assert_ne!(sample_point(kind, &dom, 0), sample_point(kind, &dom, 1));
        }
        assert_ne!(
            sample_point(PhiKind::Phi1, &dom, 3),
            sample_point(PhiKind::Phi1, &SampleDomain::with_seed(43), 3)
        );
    }

    #[test]
    fn samples_respect_the_domain() {
        let dom = SampleDomain::with_seed(1);
        let one = Complex::new(1.0, 0.0);
        for kind in PhiKind::ALL {
            for i in 0..200 {
                let s = sample_point(kind, &dom, i);
                assert!(s.x.norm() <= 0.4 && s.y.norm() <= 0.4);
                let r = s.q.modulus();
                assert!((0.1..0.8).contains(&r));
                for d in &s.denominators {
                    for j in 0..=40 {
                        assert!((*d * s.q.pow(j) - one).norm() >= 0.05);
                    }
                }
                assert!((s.get(Param::C) - s.q.value()).norm() >= 0.05);
            }
        }
    }

    #[test]
    fn thousand_samples_are_distinct() {
        let dom = SampleDomain::with_seed(9);
        let pts: Vec<PhiSpec> = (0..1000)
            .map(|i| sample_point(PhiKind::Phi3, &dom, i))
            .collect();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                assert_ne!(pts[i], pts[j]);
            }
        }
    }

    #[test]
    fn empty_suite_succeeds() {
        let out = run_suite(&[], &quick(5, vec![1])).unwrap();
        assert!(out.reports.is_empty());
        assert!(out.success());
    }

    #[test]
    fn single_relation_passes() {
        let out = run_suite(&["phi1.a.up".to_string()], &quick(50, vec![1])).unwrap();
        assert_eq!(out.reports.len(), 1);
        assert!(out.reports[0].max_residual <= 1e-8);
        assert_eq!(out.reports[0].samples, 50);
        assert!(out.success());
    }

    #[test]
    fn explicit_variants_exactly_one_passes() {
        let ids = ["thm5.1.printed".to_string(), "thm5.1.derived".to_string()];
        let out = run_suite(&ids, &quick(10, vec![2])).unwrap();
        assert_eq!(out.reports.len(), 2);
        assert!(!out.reports[0].passed());
        assert!(out.reports[1].passed());
        assert!(out.success());

        let out = run_suite(&ids[..1], &quick(10, vec![2])).unwrap();
        assert!(!out.success());
    }

    #[test]
    fn flagged_base_id_is_adjudicated() {
        let out = run_suite(&["phi4.c.up".to_string()], &quick(10, vec![1])).unwrap();
        let adj = out.reports[0].variant_adjudication.as_ref().unwrap();
        assert_eq!(adj.winner, Some(Variant::Derived));
        assert!(adj.losing_max_residual.unwrap() > 1e-3);
    }

    #[test]
    fn recursions_report_per_order() {
        let out = run_suite(&["thm2.2".to_string()], &quick(5, vec![1, 3])).unwrap();
        let labels: Vec<_> = out.reports.iter().map(|r| r.identity.as_str()).collect();
        assert_eq!(labels, ["thm2.2@n=1", "thm2.2@n=3"]);
    }

    #[test]
    fn unknown_identity_and_bad_config() {
        assert!(matches!(
            run_suite(&["nosuch.id".to_string()], &quick(1, vec![1])),
            Err(Error::UnknownIdentity(_))
        ));
        assert!(run_suite(&["thm1.1".to_string()], &quick(1, vec![13])).is_err());
        let mut cfg = quick(1, vec![1]);
        cfg.domain.q_modulus_range = (0.5, 1.2);
        assert!(run_suite(&["thm1.1".to_string()], &cfg).is_err());
    }

    #[test]
    fn evaluation_errors_become_failures() {
        let mut cfg = quick(3, vec![1]);
        cfg.eval.max_layers = 2;
        let out = run_suite(&["phi1.a.up".to_string()], &cfg).unwrap();
        assert_eq!(out.reports[0].failures.len(), 3);
        assert!(out.reports[0].failures.iter().all(|f| f.error.is_some()));
        assert!(!out.success());
    }
}

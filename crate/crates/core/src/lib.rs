//! Numerical q-Appell functions `Phi1`..`Phi4` and verification of their
//! contiguous relations and n-step recursion formulas.
//!
//! The double-series evaluator in [`phi`] is the reference every identity is
//! checked against: each identity is a [`terms::TermList`] whose weighted sum
//! must reproduce the directly evaluated left-hand side.

pub mod catalog;
pub mod error;
pub mod phi;
pub mod qcore;
pub mod recursions;
pub mod relations;
pub mod terms;
pub mod verifier;

pub use error::{Error, Result};
pub use phi::{eval_phi, term, EvalConfig, Param, PhiKind, PhiSpec, SeriesValue};
pub use qcore::{qbinom, qpoch_finite, qpoch_inf, Complex, QBase};
pub use recursions::{
    cross_check, recursion_residual, recursion_rhs, Formula, ShiftRequest, TheoremId,
};
pub use relations::{contiguous_residual, contiguous_rhs, Direction, RelationId, Shifted, Variant};
pub use terms::{evaluate_term_list, relative_residual, Residual, Term, TermList};
pub use verifier::{
    run_suite, sample_point, ResidualReport, SampleDomain, SuiteConfig, SuiteOutcome,
};

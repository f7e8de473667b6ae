//! Executable checks of the interpolation, truncation, sequence and
//! log-domination inequalities on discrete fields.
//!
//! Norms are discrete: integrals are cell sums weighted by volume, and
//! gradients come from the same face differences the solver uses. Each
//! interpolation check fits the smallest constant that works for an ensemble,
//! then re-tests it, inflated by [`REVALIDATION_SLACK`], on an ensemble drawn
//! from a different seed.

mod ensemble;
mod interpolation;
mod logdom;
mod report;
mod sequence;
mod suite;
mod truncation;

pub use ensemble::{FieldEnsemble, Generator};
pub use interpolation::{
    check_eta_interpolation, check_gn, gn_exponent, grad_lr_norm, lp_norm, power_integral,
    GnExponents, REVALIDATION_SLACK,
};
pub use logdom::{check_log_domination, domination_constant, geometric_grid};
pub use report::{InequalityReport, Revalidation, Witness};
pub use sequence::{check_sequence_lemma, sequence_trials, SequenceCheck, SEQUENCE_TOLERANCE};
pub use suite::{
    run_suite, Check, SuiteOptions, SuiteReport, ETAS, GN_CASES, REFINEMENT_GROWTH_LIMIT,
    TRUNCATION_LEVELS,
};
pub use truncation::{check_truncation, check_truncation_ensemble, xi, Gauge, TruncationReport};

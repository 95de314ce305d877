//! Estimators built on coupled soup ensembles.

mod checks;
mod ensemble;
mod nlf;
mod quotients;
mod theta_curve;

pub use checks::{
    coupling_violations, lemma11_identity_check, origin_marginal_check, poisson_tail_check,
    trajectory_count_check, CountCheck, CouplingViolations, IncrementReport, MarginalCheck,
    PoissonTailCheck,
};
pub use ensemble::{mean_se, Ensemble, EnsembleMeta};
pub use nlf::{fit_stretched_exponential, nlf_scan, NlfFit, NlfScan, MIN_FIT_COUNT, MIN_FIT_RADII};
pub use quotients::{
    comparison_radius, difference_quotients, verify_lemma13_bound, ComparisonVerdict,
    QuotientConfig, QuotientReport,
};
pub use theta_curve::{estimate_theta_curve, ThetaCurve};

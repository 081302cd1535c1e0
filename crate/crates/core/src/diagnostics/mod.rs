//! Monte Carlo diagnostics: moment identities, the proof conditions a)–c),
//! and marginal convergence of `W_n` to the diffusion.

pub mod calibration;
pub mod conditions;
pub mod convergence;
pub mod moments;
pub mod parallel;
pub mod report;

pub use crate::stats::{ecdf, ks_two_sample, Ecdf};
pub use calibration::{calibrate, Calibration, KS_THRESHOLD_N1250};
pub use conditions::{
    condition_a_gap, condition_a_identity, condition_b_gap, condition_c_lindeberg, condition_report, ConditionStudy,
};
pub use convergence::{convergence_report, marginal_convergence, ConvergenceStudy};
pub use moments::{conditional_moment_rows, cross_sum_identity, truncated_square_sum, moment_report};
pub use report::{Check, Condition, ConditionRow, DiagnosticReport, KsRow, MomentRow, Rule, Sided, Summary};

// Stream domains. Units of different kinds never share a ChaCha key.
pub(crate) const DOMAIN_PATHS: u64 = 1;
pub(crate) const DOMAIN_REFERENCE: u64 = 2;
pub(crate) const DOMAIN_CONDITIONS: u64 = 3;
pub(crate) const DOMAIN_RESAMPLE: u64 = 4;
pub(crate) const DOMAIN_MOMENTS: u64 = 5;
pub(crate) const DOMAIN_ONE_STEP: u64 = 6;
pub(crate) const DOMAIN_CROSS_SUM: u64 = 7;

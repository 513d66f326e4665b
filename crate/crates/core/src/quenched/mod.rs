//! Exact quenched algebra on a finite window with a reflection site:
//! `W`/`R` sums, expected crossing and hitting times, the exact MGF of
//! hitting times with its closed-form bounds, exit probabilities and
//! per-block expected crossing times.

mod beta;
mod mgf;
mod sums;

pub use beta::{beta_block, window_betas, QuenchedSummary};
pub use mgf::{
    bound_from_expectations, divergence_threshold, excess_margins, lambda_max, lambda_star, mgf_exact,
    mgf_per_step_bound, mgf_summary, mgf_upper_bound, mgf_upper_bound_log, tilt_margin, BoundValue, MgfExact,
    MgfResult,
};
pub use sums::{
    exit_prob, exit_prob_left, expected_hitting, expected_hitting_double_sum, expected_tau, r_right, w_left,
};

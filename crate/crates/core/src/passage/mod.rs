//! First-passage ground truth: exact dynamic programming over position
//! distributions, the linear-system MGF oracle, single-path simulation and
//! Monte Carlo frequency estimates that are reproducible across worker counts.

mod dp;
mod linear;
mod mc;
mod walk;

pub use dp::{
    hitting_tail_exact, log_tail_at, position_distribution, slowdown_exact, tail_sum, tail_sum_mismatch, MassSnapshot,
    PassageTable, PositionDistribution, TailSum, DEFAULT_MASS_TOL, DEFAULT_STEP_CAP, RESCALE_BELOW,
};
pub use linear::{mgf_linear_oracle, solve_tridiagonal};
pub use mc::{
    batch_rng, count_successes, estimate_hitting_tail_mc, estimate_slowdown_mc, McEstimate, MC_BATCH, ZERO_COUNT_ALPHA,
};
pub use walk::{simulate_walk, StopRule, WalkOutcome, WalkState};

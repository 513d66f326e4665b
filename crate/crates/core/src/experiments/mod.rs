//! Coarse-grained experiments: super-blocks, hill labels, the crossing
//! conditions and Chebyshev bound, the birth-death trace, truncated sums,
//! tail-index estimation, speed simulation and the scale scan.

mod birth_death;
mod blocks;
mod condition;
mod hill;
mod scan;
mod speed;
mod stats;
mod truncated;

pub use birth_death::{birth_death_trace, BirthDeathTrace, SiteVisits};
pub use blocks::{big_hills_per_superblock, classify_hills, coarse_grain, Hill, SuperBlocks};
pub use condition::{
    chebyshev_bound, condition_check, log_binomial_upper_tail, ChebyshevBound, ConditionReport, Crossing, ScaleParams,
};
pub use hill::{hill_tail_estimate, TailIndex, TailMethod, DEFAULT_TOP_FRACTION, MIN_EXCEEDANCES};
pub use scan::{
    oscillation_scan, slowdown_statistic, GeometricGrid, RecordChecks, ScanConfig, ScanOutput, ScanRecord, TailKind,
    TailValue,
};
pub use speed::{simulate_speed, SpeedEstimate};
pub use stats::{
    block_position_samples, estimate_q_means, normalized_max_beta, quantile, two_sample_check, MeanEstimate, QMeans,
    SecondMomentRegime, TwoSampleCheck, MEAN_BATCHES,
};
pub use truncated::{truncated_sum_stats, TruncatedSums, TruncationParams};

//! Environment laws, concrete windows, the potential and its ladder
//! decomposition, and samplers under α and Q.

mod distribution;
mod ladder;
mod sampling;
mod window;

pub use distribution::{
    lattice_span_of, log_rho_of, rho_of, Atom, DistributionSpec, EnvDistribution, OmegaSampler, Validation,
    LATTICE_TOL, S_BRACKET_CAP, WEIGHT_SUM_TOL,
};
pub use ladder::{ladder_points, LadderDecomposition, LADDER_TIE_TOL};
pub use sampling::{sample_alpha_window, sample_q_blocks, QBlockSampler, DEFAULT_BLOCK_CAP};
pub use window::{Environment, EnvironmentWindow, Reflected};

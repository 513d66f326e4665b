use thiserror::Error;

/// Every failure the library reports. Numeric blow-ups are never saturated
/// silently; they surface as [`Error::Overflow`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid environment window: {0}")]
    InvalidWindow(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no positive root of E[rho^s] = 1: {0}")]
    NoRoot(String),
    #[error("site {site} outside window [{lo}, {hi}]")]
    OutOfWindow { site: i64, lo: i64, hi: i64 },
    #[error("ladder block exceeded the cap of {cap} sites")]
    BlockOverflow { cap: usize },
    #[error("{quantity} overflowed (|value| = {value:e} > 1e300)")]
    Overflow { quantity: &'static str, value: f64 },
    #[error("moment generating function diverges at site {site}")]
    Diverged { site: i64 },
    #[error("tilt condition violated (margin {margin:e} <= 0)")]
    ConditionViolated { margin: f64 },
    #[error("no bounded solution: nonpositive pivot at site {site}")]
    NoBoundedSolution { site: i64 },
    #[error("walk left the window at site {position}")]
    WindowEscape { position: i64 },
    #[error("need {needed} ladder blocks, have {available}")]
    InsufficientBlocks { needed: usize, available: usize },
    #[error("need at least {needed} exceedances, found {found}")]
    TooFewExceedances { found: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

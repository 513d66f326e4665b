use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::walk::WalkState;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::par::{map_indexed, Parallelism};

/// Repetitions per generator stream. Fixed, so the partition of work into
/// streams does not depend on the number of workers.
pub const MC_BATCH: u64 = 4096;
/// Confidence level of the zero-count upper bound.
pub const ZERO_COUNT_ALPHA: f64 = 0.05;

/// A Monte Carlo frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub reps: u64,
    pub count: u64,
    pub p_hat: f64,
    pub std_err: f64,
    /// Exact one-sided 95% upper bound `1 - 0.05^{1/reps}` when `count = 0`.
    pub zero_upper: Option<f64>,
}

impl McEstimate {
    pub fn from_counts(count: u64, reps: u64) -> Self {
        let p = count as f64 / reps as f64;
        Self {
            reps,
            count,
            p_hat: p,
            std_err: (p * (1.0 - p) / reps as f64).sqrt(),
            zero_upper: (count == 0).then(|| 1.0 - ZERO_COUNT_ALPHA.powf(1.0 / reps as f64)),
        }
    }
}

/// Generator for batch `b` of a run seeded with `seed`.
pub fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

/// Runs `reps` Bernoulli trials in fixed batches and sums the successes.
pub fn count_successes<F>(reps: u64, seed: u64, par: Parallelism, trial: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Result<bool> + Sync + Send,
{
    if reps == 0 {
        return Err(Error::InvalidArgument("need at least one repetition".into()));
    }
    let batches = reps.div_ceil(MC_BATCH);
    let counts = map_indexed(batches as usize, par, |b| -> Result<u64> {
        let mut rng = batch_rng(seed, b as u64);
        let n = MC_BATCH.min(reps - b as u64 * MC_BATCH);
        let mut c = 0;
        for _ in 0..n {
            c += trial(&mut rng)? as u64;
        }
        Ok(c)
    });
    let mut total = 0;
    for c in counts {
        total += c?;
    }
    Ok(McEstimate::from_counts(total, reps))
}

/// Fraction of walks from `start` with `T_target > threshold`.
pub fn estimate_hitting_tail_mc<E: Environment + Sync + ?Sized>(
    env: &E,
    start: i64,
    target: i64,
    threshold: u64,
    reps: u64,
    par: Parallelism,
    seed: u64,
) -> Result<McEstimate> {
    if start >= target {
        return Err(Error::InvalidArgument(format!(
            "start {start} must lie left of target {target}"
        )));
    }
    env.check_target(target)?;
    count_successes(reps, seed, par, |rng| {
        let mut s = WalkState::new(start, rng);
        while s.position != target {
            if s.time >= threshold {
                return Ok(true);
            }
            s.step(env)?;
        }
        Ok(s.time > threshold)
    })
}

/// Fraction of walks from `start` with `X_n - start < v·n`.
pub fn estimate_slowdown_mc<E: Environment + Sync + ?Sized>(
    env: &E,
    start: i64,
    n: u64,
    v: f64,
    reps: u64,
    par: Parallelism,
    seed: u64,
) -> Result<McEstimate> {
    let level = start as f64 + v * n as f64;
    count_successes(reps, seed, par, |rng| {
        let mut s = WalkState::new(start, rng);
        while s.time < n {
            s.step(env)?;
        }
        Ok((s.position as f64) < level)
    })
}

//! Annealed speed estimate: each repetition draws a fresh environment lazily
//! as the walk explores it.

use rand::Rng;
use serde::Serialize;

use crate::env::{EnvDistribution, OmegaSampler};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Parallelism};
use crate::passage::batch_rng;

/// An i.i.d. environment on ℤ that samples site `x` on first visit.
struct LazyEnvironment {
    sampler: OmegaSampler,
    /// `ω_0, ω_1, …`
    right: Vec<f64>,
    /// `ω_{-1}, ω_{-2}, …`
    left: Vec<f64>,
}

impl LazyEnvironment {
    fn omega<R: Rng>(&mut self, x: i64, rng: &mut R) -> f64 {
        let (side, idx) = if x >= 0 {
            (&mut self.right, x as usize)
        } else {
            (&mut self.left, (-x - 1) as usize)
        };
        while side.len() <= idx {
            side.push(self.sampler.sample(rng));
        }
        side[idx]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedEstimate {
    pub steps: u64,
    /// `X_n/n` per repetition.
    pub per_rep: Vec<f64>,
    pub mean: f64,
    /// Standard error from the spread across independent repetitions.
    pub std_err: f64,
}

/// Runs `reps` independent annealed walks of `steps` steps. Repetition `r`
/// uses stream `r` of `seed`, so the result does not depend on `par`.
pub fn simulate_speed(
    dist: &EnvDistribution,
    steps: u64,
    reps: usize,
    seed: u64,
    par: Parallelism,
) -> Result<SpeedEstimate> {
    if reps < 2 || steps == 0 {
        return Err(Error::InvalidArgument(
            "need at least two repetitions of at least one step".into(),
        ));
    }
    let per_rep = map_indexed(reps, par, |r| {
        let mut rng = batch_rng(seed, r as u64);
        let mut env = LazyEnvironment {
            sampler: dist.sampler(),
            right: Vec::new(),
            left: Vec::new(),
        };
        let mut x = 0i64;
        for _ in 0..steps {
            let w = env.omega(x, &mut rng);
            x += if rng.random::<f64>() < w { 1 } else { -1 };
        }
        x as f64 / steps as f64
    });
    let n = reps as f64;
    let mean = per_rep.iter().sum::<f64>() / n;
    let var = per_rep.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SpeedEstimate {
        steps,
        per_rep,
        mean,
        std_err: (var / n).sqrt(),
    })
}

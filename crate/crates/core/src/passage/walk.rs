use rand::Rng;

use crate::env::Environment;
use crate::error::{Error, Result};

/// When a simulated walk stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    Steps(u64),
    HitTarget(i64),
    /// Stop at whichever of the two sites is reached first.
    HitEither(i64, i64),
}

/// Position and clock of a walk in a fixed environment, with its generator.
#[derive(Debug, Clone)]
pub struct WalkState<R> {
    pub position: i64,
    pub time: u64,
    pub rng: R,
}

impl<R: Rng> WalkState<R> {
    pub fn new(position: i64, rng: R) -> Self {
        Self { position, time: 0, rng }
    }

    /// One step; leaving the stored sites is a [`Error::WindowEscape`].
    #[inline]
    pub fn step<E: Environment + ?Sized>(&mut self, env: &E) -> Result<()> {
        let x = self.position;
        if !env.contains(x) {
            return Err(Error::WindowEscape { position: x });
        }
        let w = env.omega(x);
        self.position = if w >= 1.0 || self.rng.random::<f64>() < w {
            x + 1
        } else {
            x - 1
        };
        self.time += 1;
        Ok(())
    }
}

/// Where and when a simulated walk stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkOutcome {
    pub end: i64,
    pub steps: u64,
    /// The target that stopped the walk, for hitting rules.
    pub hit: Option<i64>,
}

/// Simulates one path from `start` until `stop` fires.
pub fn simulate_walk<E: Environment + ?Sized, R: Rng>(
    env: &E,
    start: i64,
    stop: StopRule,
    rng: &mut R,
) -> Result<WalkOutcome> {
    let mut s = WalkState::new(start, &mut *rng);
    match stop {
        StopRule::Steps(n) => {
            while s.time < n {
                s.step(env)?;
            }
            Ok(WalkOutcome {
                end: s.position,
                steps: s.time,
                hit: None,
            })
        }
        StopRule::HitTarget(t) => {
            while s.position != t {
                s.step(env)?;
            }
            Ok(WalkOutcome {
                end: t,
                steps: s.time,
                hit: Some(t),
            })
        }
        StopRule::HitEither(a, b) => {
            while s.position != a && s.position != b {
                s.step(env)?;
            }
            Ok(WalkOutcome {
                end: s.position,
                steps: s.time,
                hit: Some(s.position),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentWindow;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_way_walk_moves_right() {
        let w = EnvironmentWindow::new(0, vec![1.0; 50], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let o = simulate_walk(&w, 3, StopRule::Steps(20), &mut rng).unwrap();
        assert_eq!(o.end, 23);
        let o = simulate_walk(&w, 3, StopRule::HitTarget(50), &mut rng).unwrap();
        assert_eq!(o.steps, 47);
    }

    #[test]
    fn escape_is_reported_and_seeds_repeat() {
        let w = EnvironmentWindow::new(0, vec![0.5; 5], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(matches!(
            simulate_walk(&w, 2, StopRule::Steps(10_000), &mut rng),
            Err(Error::WindowEscape { .. })
        ));
        let a = simulate_walk(&w, 2, StopRule::HitEither(0, 5), &mut ChaCha8Rng::seed_from_u64(5));
        let b = simulate_walk(&w, 2, StopRule::HitEither(0, 5), &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.unwrap(), b.unwrap());
    }
}

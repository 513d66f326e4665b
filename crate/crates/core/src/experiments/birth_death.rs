//! The walk observed only at super-block boundaries: a birth-death chain
//! `Z_i` with holding durations `Θ_i`.

use rand::Rng;
use serde::Serialize;

use crate::env::EnvironmentWindow;
use crate::error::{Error, Result};
use crate::passage::WalkState;

use super::blocks::SuperBlocks;

/// Departures from one boundary index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SiteVisits {
    pub j: i64,
    pub departures: u64,
    pub left: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirthDeathTrace {
    /// `Z_0 = 0, Z_1, …, Z_N`.
    pub z: Vec<i64>,
    /// `Θ_i`: time between boundary visits `i-1` and `i`.
    pub theta: Vec<u64>,
    /// First `i ≥ 1` with `Z_i ≥ level`.
    pub n_hit: usize,
    /// First `i ≥ 1` with `|Z_i| ≥ level`.
    pub n_exit: usize,
    pub left_steps: u64,
    pub target_site: i64,
    /// First hitting time of `target_site`.
    pub target_time: Option<u64>,
    pub visits: Vec<SiteVisits>,
}

impl BirthDeathTrace {
    /// `Σ_{i≤N} Θ_i`, the total simulated time.
    pub fn total_time(&self) -> u64 {
        self.theta.iter().sum()
    }

    /// Empirical left-step frequency at boundary `j`.
    pub fn left_frequency(&self, j: i64) -> Option<f64> {
        self.visits
            .iter()
            .find(|v| v.j == j && v.departures > 0)
            .map(|v| v.left as f64 / v.departures as f64)
    }
}

/// Runs the walk from `ν(0)` until `Z` first reaches `level` (typically
/// `n/a`), recording every boundary transition and the first hitting time of
/// `target_site`. Gives up with `Overflow` after `step_cap` walk steps.
pub fn birth_death_trace<R: Rng>(
    window: &EnvironmentWindow,
    sb: &SuperBlocks,
    level: f64,
    target_site: i64,
    rng: R,
    step_cap: u64,
) -> Result<BirthDeathTrace> {
    if !(level > 0.0) {
        return Err(Error::InvalidArgument(format!("level {level} must be positive")));
    }
    let top = level.ceil() as i64;
    sb.require(0, top)?;
    let start = sb.nu(0)?;
    if !(start..=sb.nu(top)?).contains(&target_site) {
        return Err(Error::InvalidArgument(format!(
            "target {target_site} must lie between ν(0) and ν({top})"
        )));
    }
    let mut walk = WalkState::new(start, rng);
    let mut trace = BirthDeathTrace {
        z: vec![0],
        theta: Vec::new(),
        n_hit: 0,
        n_exit: 0,
        left_steps: 0,
        target_site,
        target_time: (start == target_site).then_some(0),
        visits: Vec::new(),
    };
    let mut j = 0i64;
    let mut since = 0u64;
    loop {
        let left = if j > sb.first { Some(sb.nu(j - 1)?) } else { None };
        let right = sb.nu(j + 1)?;
        let hit = loop {
            if walk.time >= step_cap {
                return Err(Error::Overflow {
                    quantity: "birth-death trace steps",
                    value: walk.time as f64,
                });
            }
            walk.step(window)?;
            if trace.target_time.is_none() && walk.position == target_site {
                trace.target_time = Some(walk.time);
            }
            if walk.position == right {
                break j + 1;
            }
            if Some(walk.position) == left {
                break j - 1;
            }
        };
        record_departure(&mut trace.visits, j, hit < j);
        if hit < j {
            trace.left_steps += 1;
        }
        trace.theta.push(walk.time - since);
        since = walk.time;
        j = hit;
        trace.z.push(j);
        let i = trace.z.len() - 1;
        if trace.n_exit == 0 && (j as f64).abs() >= level {
            trace.n_exit = i;
        }
        if j as f64 >= level {
            trace.n_hit = i;
            return Ok(trace);
        }
    }
}

fn record_departure(visits: &mut Vec<SiteVisits>, j: i64, left: bool) {
    let v = match visits.iter_mut().find(|v| v.j == j) {
        Some(v) => v,
        None => {
            visits.push(SiteVisits {
                j,
                departures: 0,
                left: 0,
            });
            visits.last_mut().unwrap()
        }
    };
    v.departures += 1;
    v.left += left as u64;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ladder_points;
    use crate::experiments::coarse_grain;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_way_walk_moves_right_only() {
        let w = EnvironmentWindow::new(-20, vec![1.0; 60], None).unwrap();
        let mut d = ladder_points(&w, -20, 40).unwrap();
        d.origin_block = Some(20);
        let sb = coarse_grain(&d, 3).unwrap();
        let t = birth_death_trace(&w, &sb, 5.0, 14, ChaCha8Rng::seed_from_u64(1), 1000).unwrap();
        assert_eq!(t.z, vec![0, 1, 2, 3, 4, 5]);
        assert!(t.theta.iter().all(|&x| x == 3));
        assert_eq!(t.n_hit, 5);
        assert_eq!(t.n_exit, t.n_hit);
        assert_eq!(t.left_steps, 0);
        assert_eq!(t.target_time, Some(14));
        assert_eq!(t.total_time(), 15);
    }

    #[test]
    fn target_time_bounded_by_total() {
        let om: Vec<f64> = (0..400)
            .map(|i| {
                if i == 0 {
                    1.0
                } else if i % 5 == 0 {
                    0.4
                } else {
                    0.75
                }
            })
            .collect();
        let w = EnvironmentWindow::new(-200, om, Some(-200)).unwrap();
        let mut d = ladder_points(&w, -200, 200).unwrap();
        let origin = d.nus.iter().position(|&x| x >= 0).unwrap();
        d.origin_block = Some(origin);
        let sb = coarse_grain(&d, 2).unwrap();
        for seed in 0..20 {
            let target = sb.nu(6).unwrap();
            let t = birth_death_trace(&w, &sb, 6.0, target, ChaCha8Rng::seed_from_u64(seed), 1 << 24).unwrap();
            assert!(t.target_time.unwrap() <= t.total_time());
            assert_eq!(t.theta.len(), t.n_hit);
            assert!(t.n_exit <= t.n_hit);
        }
    }
}

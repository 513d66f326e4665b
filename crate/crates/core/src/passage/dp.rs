use crate::env::Environment;
use crate::error::{Error, Result};
use crate::quenched::expected_hitting;

/// Entries are rescaled once the largest drops below this.
pub const RESCALE_BELOW: f64 = 1e-250;
/// Auto-extension stops once the surviving mass is below this.
pub const DEFAULT_MASS_TOL: f64 = 1e-12;
/// Hard cap on auto-extended horizons.
pub const DEFAULT_STEP_CAP: usize = 10_000_000;

/// Forward evolution of the sub-probability vector of a walk started at
/// `start`, reflected at `m` and absorbed on reaching `target`.
struct HittingDp<'a, E: Environment + ?Sized> {
    env: &'a E,
    m: i64,
    mass: Vec<f64>,
    next: Vec<f64>,
    /// Nonzero entries lie in `support.0..=support.1`.
    support: (usize, usize),
    log_scale: f64,
    /// Absorbed mass in unscaled units; only tracked before the first rescale.
    absorbed: f64,
    time: usize,
    conservation_error: f64,
    /// Running minimum of the reported log-survival; rounding in the mass
    /// sum must not make the survival function increase.
    floor: f64,
}

impl<'a, E: Environment + ?Sized> HittingDp<'a, E> {
    fn new(env: &'a E, start: i64, target: i64) -> Result<Self> {
        let m = env
            .reflection()
            .ok_or_else(|| Error::InvalidWindow("passage DP needs a reflection site".into()))?;
        if !(m <= start && start < target) {
            return Err(Error::InvalidArgument(format!(
                "need reflection <= start < target, got {m}, {start}, {target}"
            )));
        }
        env.check_target(target)?;
        let states = (target - m) as usize;
        let mut mass = vec![0.0; states];
        let s = (start - m) as usize;
        mass[s] = 1.0;
        Ok(Self {
            env,
            m,
            mass,
            next: vec![0.0; states],
            support: (s, s),
            log_scale: 0.0,
            absorbed: 0.0,
            time: 0,
            conservation_error: 0.0,
            floor: 0.0,
        })
    }

    fn rescaled(&self) -> bool {
        self.log_scale != 0.0
    }

    fn step(&mut self) {
        let (lo, hi) = self.support;
        let states = self.mass.len();
        let new_lo = lo.saturating_sub(1);
        let new_hi = (hi + 1).min(states - 1);
        self.next[new_lo..=new_hi].iter_mut().for_each(|v| *v = 0.0);
        let mut absorbed_now = 0.0;
        for i in lo..=hi {
            let p = self.mass[i];
            if p == 0.0 {
                continue;
            }
            let w = self.env.omega(self.m + i as i64);
            let right = p * w;
            if i + 1 == states {
                absorbed_now += right;
            } else {
                self.next[i + 1] += right;
            }
            if w < 1.0 {
                self.next[i - 1] += p - right;
            }
        }
        self.mass[lo..=hi].iter_mut().for_each(|v| *v = 0.0);
        std::mem::swap(&mut self.mass, &mut self.next);
        self.support = (new_lo, new_hi);
        self.time += 1;
        if !self.rescaled() {
            self.absorbed += absorbed_now;
            let retained: f64 = self.mass[new_lo..=new_hi].iter().sum();
            let err = (retained + self.absorbed - 1.0).abs();
            self.conservation_error = self.conservation_error.max(err);
        }
        let max = self.mass[new_lo..=new_hi].iter().fold(0.0f64, |a, &b| a.max(b));
        if max > 0.0 && max < RESCALE_BELOW {
            let inv = 1.0 / max;
            self.mass[new_lo..=new_hi].iter_mut().for_each(|v| *v *= inv);
            self.log_scale += max.ln();
        }
        self.floor = self.floor.min(self.current_log_survival());
    }

    fn current_log_survival(&self) -> f64 {
        if !self.rescaled() && self.absorbed == 0.0 {
            // Nothing absorbed yet: exactly 1, without summation rounding.
            return 0.0;
        }
        let (lo, hi) = self.support;
        let sum: f64 = self.mass[lo..=hi].iter().sum();
        if sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            sum.ln() + self.log_scale
        }
    }

    /// `log P(T_target > time)`.
    fn log_survival(&self) -> f64 {
        self.floor
    }

    fn snapshot(&self) -> MassSnapshot {
        MassSnapshot {
            time: self.time,
            first_site: self.m,
            log_scale: self.log_scale,
            mass: self.mass.clone(),
        }
    }
}

/// Position distribution (unabsorbed part) at one time, on sites
/// `first_site..target`, stored as `mass · e^{log_scale}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassSnapshot {
    pub time: usize,
    pub first_site: i64,
    pub log_scale: f64,
    pub mass: Vec<f64>,
}

impl MassSnapshot {
    pub fn prob(&self, site: i64) -> f64 {
        let i = site - self.first_site;
        if i < 0 || i as usize >= self.mass.len() {
            return 0.0;
        }
        self.mass[i as usize] * self.log_scale.exp()
    }
}

/// Exact survival function of a hitting time.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageTable {
    pub start: i64,
    pub target: i64,
    pub reflection: i64,
    pub horizon: usize,
    /// `log P(T_target > τ)` for `τ = 0..=horizon`.
    pub log_survival: Vec<f64>,
    pub snapshots: Vec<MassSnapshot>,
    /// Largest `|retained + absorbed - 1|` seen before any rescaling.
    pub conservation_error: f64,
}

impl PassageTable {
    pub fn survival(&self, tau: usize) -> f64 {
        self.log_survival[tau].exp()
    }
}

/// Survival table of `T_target` for the walk from `start` reflected at the
/// environment's reflection site, over `0..=horizon`, keeping full position
/// distributions at `snapshot_times`.
pub fn hitting_tail_exact<E: Environment + ?Sized>(
    env: &E,
    start: i64,
    target: i64,
    horizon: usize,
    snapshot_times: &[usize],
) -> Result<PassageTable> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut dp = HittingDp::new(env, start, target)?;
    let mut log_survival = Vec::with_capacity(horizon + 1);
    let mut snapshots = Vec::new();
    log_survival.push(dp.log_survival());
    if snapshot_times.contains(&0) {
        snapshots.push(dp.snapshot());
    }
    for _ in 0..horizon {
        dp.step();
        log_survival.push(dp.log_survival());
        if snapshot_times.contains(&dp.time) {
            snapshots.push(dp.snapshot());
        }
    }
    Ok(PassageTable {
        start,
        target,
        reflection: dp.m,
        horizon,
        log_survival,
        snapshots,
        conservation_error: dp.conservation_error,
    })
}

/// `log P(T_target > t)` at each requested `t`, streaming without a table.
pub fn log_tail_at<E: Environment + ?Sized>(env: &E, start: i64, target: i64, times: &[usize]) -> Result<Vec<f64>> {
    let mut dp = HittingDp::new(env, start, target)?;
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by_key(|&i| times[i]);
    let mut out = vec![0.0; times.len()];
    for i in order {
        while dp.time < times[i] {
            dp.step();
        }
        out[i] = dp.log_survival();
    }
    Ok(out)
}

/// `Σ_τ P(T > τ)` accumulated until the surviving mass falls below
/// `mass_tol` or `step_cap` steps have run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSum {
    pub sum: f64,
    pub steps: usize,
    pub residual_mass: f64,
    /// True when the cap stopped the extension first.
    pub truncated: bool,
}

pub fn tail_sum<E: Environment + ?Sized>(
    env: &E,
    start: i64,
    target: i64,
    mass_tol: f64,
    step_cap: usize,
) -> Result<TailSum> {
    let mut dp = HittingDp::new(env, start, target)?;
    let mut sum = 0.0;
    loop {
        let surv = dp.log_survival().exp();
        if surv < mass_tol || dp.time >= step_cap {
            return Ok(TailSum {
                sum,
                steps: dp.time,
                residual_mass: surv,
                truncated: surv >= mass_tol,
            });
        }
        sum += surv;
        dp.step();
    }
}

/// Relative gap between the tail-sum mean and [`expected_hitting`].
pub fn tail_sum_mismatch<E: Environment + ?Sized>(env: &E, start: i64, target: i64) -> Result<f64> {
    let t = tail_sum(env, start, target, DEFAULT_MASS_TOL, DEFAULT_STEP_CAP)?;
    let e = expected_hitting(env, start, target)?;
    Ok((t.sum - e).abs() / e)
}

/// Distribution of `X_n` for a free walk (reflected if the environment has a
/// reflection site), stored as `mass · e^{log_scale}` over `first_site..`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionDistribution {
    pub time: usize,
    pub start: i64,
    pub first_site: i64,
    pub log_scale: f64,
    pub mass: Vec<f64>,
}

impl PositionDistribution {
    pub fn prob(&self, site: i64) -> f64 {
        let i = site - self.first_site;
        if i < 0 || i as usize >= self.mass.len() {
            return 0.0;
        }
        self.mass[i as usize] * self.log_scale.exp()
    }

    /// `log P(X_n < level)`; `-∞` when no mass lies below.
    pub fn log_prob_below(&self, level: f64) -> f64 {
        let mut sum = 0.0;
        for (i, &p) in self.mass.iter().enumerate() {
            if ((self.first_site + i as i64) as f64) < level {
                sum += p;
            }
        }
        if sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            sum.ln() + self.log_scale
        }
    }
}

/// Exact law of `X_n` from `start`. The window must hold every site the walk
/// can occupy before its last step, unless a reflection bounds it on the left.
pub fn position_distribution<E: Environment + ?Sized>(env: &E, start: i64, n: usize) -> Result<PositionDistribution> {
    env.check_site(start)?;
    let reach = n as i64;
    let first = match env.reflection() {
        Some(m) if m <= start => m,
        _ => start - reach,
    };
    if n > 0 {
        let left_needed = first.max(start - reach + 1);
        env.check_site(left_needed)
            .map_err(|_| Error::InvalidWindow(format!("window must reach site {left_needed} on the left")))?;
        env.check_site(start + reach - 1)
            .map_err(|_| Error::InvalidWindow(format!("window must reach site {} on the right", start + reach - 1)))?;
    }
    let len = (start + reach - first + 1) as usize;
    let mut mass = vec![0.0; len];
    let mut next = vec![0.0; len];
    let s = (start - first) as usize;
    mass[s] = 1.0;
    let (mut lo, mut hi) = (s, s);
    let mut log_scale = 0.0;
    for _ in 0..n {
        let new_lo = lo.saturating_sub(1);
        let new_hi = hi + 1;
        next[new_lo..=new_hi].iter_mut().for_each(|v| *v = 0.0);
        for i in lo..=hi {
            let p = mass[i];
            if p == 0.0 {
                continue;
            }
            let w = env.omega(first + i as i64);
            let right = p * w;
            next[i + 1] += right;
            if w < 1.0 {
                next[i - 1] += p - right;
            }
        }
        mass[lo..=hi].iter_mut().for_each(|v| *v = 0.0);
        std::mem::swap(&mut mass, &mut next);
        lo = new_lo;
        hi = new_hi;
        let max = mass[lo..=hi].iter().fold(0.0f64, |a, &b| a.max(b));
        if max > 0.0 && max < RESCALE_BELOW {
            let inv = 1.0 / max;
            mass[lo..=hi].iter_mut().for_each(|v| *v *= inv);
            log_scale += max.ln();
        }
    }
    Ok(PositionDistribution {
        time: n,
        start,
        first_site: first,
        log_scale,
        mass,
    })
}

/// `log P_ω(X_n - start < v·n)`, with `-∞` for an impossible event.
pub fn slowdown_exact<E: Environment + ?Sized>(env: &E, start: i64, n: usize, v: f64) -> Result<f64> {
    let dist = position_distribution(env, start, n)?;
    Ok(dist.log_prob_below(start as f64 + v * n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentWindow;

    fn reflected(om: &[f64]) -> EnvironmentWindow {
        let mut v = om.to_vec();
        v[0] = 1.0;
        EnvironmentWindow::new(0, v, Some(0)).unwrap()
    }

    #[test]
    fn survival_is_one_before_minimum_travel_time() {
        let w = reflected(&[1.0, 0.3, 0.6, 0.2, 0.9, 0.5]);
        let t = hitting_tail_exact(&w, 1, 6, 200, &[3, 50]).unwrap();
        for tau in 0..5 {
            assert_eq!(t.survival(tau), 1.0);
        }
        assert!(t.survival(5) < 1.0);
        assert!(t.log_survival.windows(2).all(|p| p[1] <= p[0]));
        assert!(t.conservation_error < 1e-12);
        assert_eq!(t.snapshots.len(), 2);
        let total: f64 = (0..6).map(|x| t.snapshots[0].prob(x)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_walk_has_no_tail() {
        let w = reflected(&[1.0; 8]);
        let t = hitting_tail_exact(&w, 2, 8, 20, &[]).unwrap();
        for tau in 0..6 {
            assert_eq!(t.survival(tau), 1.0);
        }
        for tau in 6..=20 {
            assert_eq!(t.survival(tau), 0.0);
        }
    }

    #[test]
    fn tail_sum_matches_expectation() {
        let w = reflected(&[1.0, 0.3, 0.6, 0.2, 0.9, 0.5, 0.7]);
        assert!(tail_sum_mismatch(&w, 0, 7).unwrap() < 1e-9);
        assert!(tail_sum_mismatch(&w, 3, 6).unwrap() < 1e-9);
    }

    #[test]
    fn streaming_agrees_with_table() {
        let w = reflected(&[1.0, 0.3, 0.6, 0.2, 0.9, 0.5, 0.7]);
        let t = hitting_tail_exact(&w, 0, 7, 400, &[]).unwrap();
        let s = log_tail_at(&w, 0, 7, &[400, 7, 100]).unwrap();
        assert_eq!(s, vec![t.log_survival[400], t.log_survival[7], t.log_survival[100]]);
    }

    #[test]
    fn rescaling_keeps_tiny_tails() {
        // A deep trap: the tail decays far below 1e-300 within the horizon.
        let w = reflected(&[1.0, 0.9, 0.9, 0.1, 0.9]);
        let t = hitting_tail_exact(&w, 0, 5, 20_000, &[]).unwrap();
        let last = t.log_survival[20_000];
        assert!(last.is_finite() && last < -700.0);
    }

    #[test]
    fn slowdown_examples_and_parity() {
        let one = EnvironmentWindow::new(-30, vec![1.0; 61], None).unwrap();
        assert_eq!(slowdown_exact(&one, 0, 20, 1.0).unwrap(), f64::NEG_INFINITY);
        let hom = EnvironmentWindow::new(-30, vec![2.0 / 3.0; 61], None).unwrap();
        for n in 1..=20usize {
            let p = slowdown_exact(&hom, 0, n, 1.0).unwrap().exp();
            let exact = 1.0 - (2.0f64 / 3.0).powi(n as i32);
            assert!((p - exact).abs() < 1e-12, "{n}");
            let d = position_distribution(&hom, 0, n).unwrap();
            for x in -(n as i64)..=n as i64 {
                if (x + n as i64) % 2 != 0 {
                    assert_eq!(d.prob(x), 0.0);
                }
            }
        }
        assert!(position_distribution(&hom, 0, 40).is_err());
    }
}

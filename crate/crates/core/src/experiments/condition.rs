//! Per-scale parameters, the super-block crossing condition and the
//! Chebyshev product bound on the coarse-grained passage time.

use serde::Serialize;

use crate::env::EnvironmentWindow;
use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::par::{map_indexed, Parallelism};
use crate::quenched::{bound_from_expectations, exit_prob_left, expected_hitting, mgf_exact, BoundValue, MgfExact};

use super::blocks::SuperBlocks;

/// Scale-dependent constants for one value of `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleParams {
    pub n: u64,
    pub s: f64,
    /// `n^{1/s}/D` before rounding.
    pub a_real: f64,
    /// `max(1, floor(a_real))`.
    pub a: usize,
    /// `J = floor(n/a)`; super-blocks `j ∈ [-J, J]` are checked.
    pub half_width: i64,
    /// `λ = D0·n^{-1/s}`.
    pub lambda: f64,
    /// `L = ceil(n/(a(1-δ)))`.
    pub steps: u64,
    pub u: f64,
}

impl ScaleParams {
    pub fn new(n: u64, s: f64, d: f64, d0: f64, delta: f64, u: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("scale n must be positive".into()));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidArgument(format!("exponent s = {s} must be positive")));
        }
        for (name, v) in [("D", d), ("D0", d0), ("u", u)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta = {delta} not in (0, 1)")));
        }
        let nf = n as f64;
        let root = nf.powf(1.0 / s);
        let a_real = root / d;
        let a = (a_real.floor() as usize).max(1);
        Ok(Self {
            n,
            s,
            a_real,
            a,
            half_width: (n / a as u64) as i64,
            lambda: d0 / root,
            steps: (nf / (a as f64 * (1.0 - delta))).ceil() as u64,
            u,
        })
    }

    /// `n^{1-1/s}`, the normalization of log-probabilities.
    pub fn normalizer(&self) -> f64 {
        (self.n as f64).powf(1.0 - 1.0 / self.s)
    }

    /// Threshold `e^{-λ}/sinh λ` on reflected crossing expectations.
    pub fn mgf_threshold(&self) -> f64 {
        (-self.lambda).exp() / self.lambda.sinh()
    }

    /// Super-block indices needed for the checks: `-J-1 ..= J+1`.
    pub fn superblock_range(&self) -> (i64, i64) {
        (-self.half_width - 1, self.half_width + 1)
    }
}

/// Reflected expectations for super-block `j`: the walk is reflected at
/// `ν(j-1)` and `far`, `near` are its expected hitting times of `ν(j+1)`
/// from `ν(j-1)` and from `ν(j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub j: i64,
    pub reflection: i64,
    pub from: i64,
    pub to: i64,
    pub far: f64,
    pub near: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub lambda: f64,
    pub crossings: Vec<Crossing>,
    pub max_far: f64,
    /// `e^{-λ}/sinh λ`.
    pub mgf_threshold: f64,
    /// `2(Ê_Q[β_0] + ε_1)·a`.
    pub ex1_threshold: f64,
    pub cond_mgf: bool,
    pub cond_ex1: bool,
}

/// Evaluates both super-block conditions over `j ∈ [-J, J]`.
pub fn condition_check(
    window: &EnvironmentWindow,
    sb: &SuperBlocks,
    params: &ScaleParams,
    e_beta: f64,
    eps1: f64,
    par: Parallelism,
) -> Result<ConditionReport> {
    let (lo, hi) = params.superblock_range();
    sb.require(lo, hi)?;
    let js: Vec<i64> = (-params.half_width..=params.half_width).collect();
    let crossings = map_indexed(js.len(), par, |t| -> Result<Crossing> {
        let j = js[t];
        let (m, k0, k1) = (sb.nu(j - 1)?, sb.nu(j)?, sb.nu(j + 1)?);
        let env = window.reflect_at(m)?;
        Ok(Crossing {
            j,
            reflection: m,
            from: k0,
            to: k1,
            far: expected_hitting(&env, m, k1)?,
            near: expected_hitting(&env, k0, k1)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max_far = crossings.iter().map(|c| c.far).fold(0.0, f64::max);
    let mgf_threshold = params.mgf_threshold();
    let ex1_threshold = 2.0 * (e_beta + eps1) * params.a as f64;
    Ok(ConditionReport {
        lambda: params.lambda,
        crossings,
        max_far,
        mgf_threshold,
        ex1_threshold,
        cond_mgf: max_far < mgf_threshold,
        cond_ex1: max_far < ex1_threshold,
    })
}

/// Log-scale Chebyshev bound on `P_ω(Σ_{i≤L} Θ_i > u·ν_n)` and the remainder
/// terms that turn it into a bound on the passage time itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChebyshevBound {
    /// `max_j` of the log crossing-MGF bound.
    pub log_mgf_bound: f64,
    /// `max_j` of the exact log crossing MGF.
    pub log_mgf_exact: f64,
    /// `λ·u·ν_n`.
    pub lambda_term: f64,
    /// `L·log_mgf_bound - λuν_n`.
    pub log_bound: f64,
    /// `L·log_mgf_exact - λuν_n`.
    pub log_bound_exact: f64,
    pub normalizer: f64,
    pub bound_norm: f64,
    pub bound_exact_norm: f64,
    /// Largest probability of a left step of the coarse-grained chain.
    pub p_left_max: f64,
    /// `log P(Bin(L, p_left_max) > (L - n/a)/2)`: the chain needs more than
    /// `L` steps.
    pub log_binomial_tail: f64,
    /// `J·log(p/(1-p))`: the chain leaves `[-J, J]` on the left first.
    pub log_ruin: f64,
    /// `log` of the sum of the Chebyshev bound and both remainders.
    pub log_full_bound: f64,
    pub full_bound_norm: f64,
}

/// The bound over `L` super-block crossings, each reflected one super-block
/// to the left, evaluated with both the closed-form MGF bound and the exact
/// MGF. Errors with `ConditionViolated` if some crossing leaves the bound's
/// domain.
pub fn chebyshev_bound(
    window: &EnvironmentWindow,
    params: &ScaleParams,
    report: &ConditionReport,
    nu_n: i64,
    par: Parallelism,
) -> Result<ChebyshevBound> {
    let lambda = params.lambda;
    let per = map_indexed(report.crossings.len(), par, |t| -> Result<(f64, f64, f64)> {
        let c = &report.crossings[t];
        let bound = match bound_from_expectations(lambda, c.near, c.far) {
            BoundValue::Finite { log_value } => log_value,
            BoundValue::ConditionViolated { margin } => return Err(Error::ConditionViolated { margin }),
        };
        let env = window.reflect_at(c.reflection)?;
        let exact = match mgf_exact(&env, c.from, c.to, lambda)? {
            MgfExact::Finite { log_value } => log_value,
            MgfExact::Diverged { site } => return Err(Error::Diverged { site }),
        };
        let left = exit_prob_left(window, c.reflection, c.from, c.to)?;
        Ok((bound, exact, left))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let log_mgf_bound = per.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let log_mgf_exact = per.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let p_left_max = per.iter().map(|p| p.2).fold(0.0, f64::max);
    let steps = params.steps as f64;
    let lambda_term = lambda * params.u * nu_n as f64;
    let log_bound = steps * log_mgf_bound - lambda_term;
    let log_bound_exact = steps * log_mgf_exact - lambda_term;
    let reach = params.n as f64 / params.a as f64;
    let needed = ((steps - reach) / 2.0).floor() as i64 + 1;
    let log_binomial_tail = log_binomial_upper_tail(params.steps, p_left_max, needed);
    let log_ruin = if p_left_max < 0.5 {
        (params.half_width as f64 * (p_left_max / (1.0 - p_left_max)).ln()).min(0.0)
    } else {
        0.0
    };
    let log_full_bound = log_sum_exp([log_bound, log_binomial_tail, log_ruin]).min(0.0);
    let normalizer = params.normalizer();
    Ok(ChebyshevBound {
        log_mgf_bound,
        log_mgf_exact,
        lambda_term,
        log_bound,
        log_bound_exact,
        normalizer,
        bound_norm: log_bound / normalizer,
        bound_exact_norm: log_bound_exact / normalizer,
        p_left_max,
        log_binomial_tail,
        log_ruin,
        log_full_bound,
        full_bound_norm: log_full_bound / normalizer,
    })
}

/// `log P(Bin(trials, p) ≥ k)` by summing log-pmf terms.
pub fn log_binomial_upper_tail(trials: u64, p: f64, k: i64) -> f64 {
    if k <= 0 {
        return 0.0;
    }
    let k = k as u64;
    if k > trials || p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    // log C(trials, i) built up incrementally from i = 0.
    let mut log_choose = 0.0;
    let mut terms = Vec::with_capacity((trials - k + 1) as usize);
    for i in 0..=trials {
        if i > 0 {
            log_choose += ((trials - i + 1) as f64).ln() - (i as f64).ln();
        }
        if i >= k {
            terms.push(log_choose + i as f64 * lp + (trials - i) as f64 * lq);
        }
    }
    log_sum_exp(terms).min(0.0)
}

//! Scan of the normalized slowdown statistic over scales `n` in one fixed
//! Q-environment, with the coarse-grained conditions and bounds per scale.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvDistribution, EnvironmentWindow, LadderDecomposition, QBlockSampler};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Parallelism};
use crate::passage::{estimate_hitting_tail_mc, log_tail_at};

use super::blocks::{big_hills_per_superblock, classify_hills, coarse_grain};
use super::condition::{chebyshev_bound, condition_check, ChebyshevBound, ConditionReport, ScaleParams};
use super::stats::{estimate_q_means, QMeans};

/// Geometric grid of scales `n_min, …, n_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricGrid {
    pub n_min: u64,
    pub n_max: u64,
    pub points: usize,
}

impl GeometricGrid {
    /// Rounded, deduplicated grid values.
    pub fn values(&self) -> Vec<u64> {
        if self.points <= 1 || self.n_max <= self.n_min {
            return vec![self.n_min];
        }
        let ratio = (self.n_max as f64 / self.n_min as f64).ln() / (self.points - 1) as f64;
        let mut out: Vec<u64> = (0..self.points)
            .map(|i| (self.n_min as f64 * (ratio * i as f64).exp()).round() as u64)
            .collect();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Base of the literal subsequence `n_k = m^{m^k}`.
    pub m: u32,
    pub k_range: Vec<u32>,
    /// Additional scales between the literal ones.
    pub geometric: Option<GeometricGrid>,
    /// `a = n^{1/s}/D`.
    #[serde(rename = "D")]
    pub d: f64,
    /// `λ = D0·n^{-1/s}`.
    #[serde(rename = "D0")]
    pub d0: f64,
    /// `L = n/(a(1-δ))`.
    pub delta: f64,
    /// Slowdown factor; `2/v` when absent.
    pub u: Option<f64>,
    /// Hill threshold exponent.
    pub eps: f64,
    pub eps1: f64,
    pub mc_reps: u64,
    pub seed: u64,
    /// Blocks used for the empirical Q-means.
    pub q_mean_blocks: usize,
    /// Largest `states × horizon` handled by exact DP; larger scales use MC.
    pub dp_budget: f64,
    /// Scales above this are recorded as skipped.
    pub max_n: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            m: 3,
            k_range: vec![0, 1, 2],
            geometric: Some(GeometricGrid {
                n_min: 40,
                n_max: 3000,
                points: 16,
            }),
            d: 1.0,
            d0: 0.015,
            delta: 0.3,
            u: None,
            eps: 0.1,
            eps1: 10.0,
            mc_reps: 2000,
            seed: 2024,
            q_mean_blocks: 100_000,
            dp_budget: 2e9,
            max_n: 50_000,
        }
    }
}

impl ScanConfig {
    /// Checks the constraints that do not depend on sampled quantities.
    pub fn validate(&self, s: f64, v: f64) -> Result<()> {
        if !(f64::from(self.m) > s) {
            return Err(Error::InvalidArgument(format!("m = {} must exceed s = {s}", self.m)));
        }
        let u = self.resolved_u(v);
        if !(u * v > 1.0) {
            return Err(Error::InvalidArgument(format!("u = {u} must exceed 1/v = {}", 1.0 / v)));
        }
        let eps_max = (s - 1.0) / (2.0 * s);
        if !(self.eps > 0.0 && self.eps < eps_max) {
            return Err(Error::InvalidArgument(format!(
                "eps = {} not in (0, {eps_max})",
                self.eps
            )));
        }
        for (name, x) in [
            ("D", self.d),
            ("D0", self.d0),
            ("eps1", self.eps1),
            ("dp_budget", self.dp_budget),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {x} must be positive")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta = {} not in (0, 1)", self.delta)));
        }
        if self.mc_reps == 0 {
            return Err(Error::InvalidArgument("mc_reps must be positive".into()));
        }
        Ok(())
    }

    pub fn resolved_u(&self, v: f64) -> f64 {
        self.u.unwrap_or(2.0 / v)
    }

    /// `D > 2(Ê_Q[β_0] + ε_1)·D0`.
    pub fn relation_holds(&self, e_beta: f64) -> bool {
        self.d > 2.0 * (e_beta + self.eps1) * self.d0
    }

    /// `(k, n)` pairs: the literal subsequence first, then the grid.
    pub fn scales(&self) -> Vec<(Option<u32>, Option<u64>)> {
        let mut out: Vec<(Option<u32>, Option<u64>)> = self
            .k_range
            .iter()
            .map(|&k| {
                let n = self.m.checked_pow(k).and_then(|e| u64::from(self.m).checked_pow(e));
                (Some(k), n)
            })
            .collect();
        if let Some(g) = &self.geometric {
            out.extend(g.values().into_iter().map(|n| (None, Some(n))));
        }
        out
    }
}

/// How `log P(T_{ν_n} > u·ν_n)` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailKind {
    Exact,
    MonteCarlo,
    /// No MC success: `log_p` is a certified upper bound.
    MonteCarloZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailValue {
    pub kind: TailKind,
    pub log_p: f64,
    /// `log_p / n^{1-1/s}`.
    pub a_n: f64,
    pub a_n_err: f64,
}

/// Internal-consistency checks of one record; `None` when not applicable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecordChecks {
    /// Exact tail ≤ Chebyshev bound.
    pub tail_le_bound: Option<bool>,
    /// Exact-MGF bound ≤ closed-form bound.
    pub exact_le_closed_form: Option<bool>,
    /// `(ex1) ∧ relation ⇒ (condition)`.
    pub implication: bool,
}

impl RecordChecks {
    pub fn all_hold(&self) -> bool {
        self.tail_le_bound != Some(false) && self.exact_le_closed_form != Some(false) && self.implication
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub k: Option<u32>,
    pub n: u64,
    pub params: Option<ScaleParams>,
    pub nu_n: Option<i64>,
    pub cond_ex1: Option<bool>,
    pub cond_mgf: Option<bool>,
    /// `max_j` reflected expected crossing time over two super-blocks.
    pub max_beta_sum: Option<f64>,
    pub ex1_threshold: Option<f64>,
    pub mgf_threshold: Option<f64>,
    pub big_hills: Option<usize>,
    /// Super-blocks holding at least two big hills.
    pub multi_big: Option<usize>,
    pub bound: Option<ChebyshevBound>,
    pub tail: Option<TailValue>,
    pub checks: Option<RecordChecks>,
    pub status: String,
}

impl ScanRecord {
    fn failed(k: Option<u32>, n: u64, status: String) -> Self {
        Self {
            k,
            n,
            params: None,
            nu_n: None,
            cond_ex1: None,
            cond_mgf: None,
            max_beta_sum: None,
            ex1_threshold: None,
            mgf_threshold: None,
            big_hills: None,
            multi_big: None,
            bound: None,
            tail: None,
            checks: None,
            status,
        }
    }

    pub const CSV_HEADER: &'static str = "k,n,a,lambda,cond_ex1,cond_mgf,max_beta_sum,bound_norm,A_n,A_n_err,status";

    pub fn csv_row(&self) -> String {
        fn opt<T: std::fmt::Display>(x: Option<T>) -> String {
            x.map_or_else(|| "NA".to_string(), |v| v.to_string())
        }
        let a_n = match self.tail {
            None => "NA".to_string(),
            Some(t) if t.kind == TailKind::MonteCarloZero => format!("<={}", t.a_n),
            Some(t) => t.a_n.to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.k.map_or_else(|| "-".to_string(), |k| k.to_string()),
            self.n,
            opt(self.params.as_ref().map(|p| p.a)),
            opt(self.params.as_ref().map(|p| p.lambda)),
            opt(self.cond_ex1),
            opt(self.cond_mgf),
            opt(self.max_beta_sum),
            opt(self.bound.as_ref().map(|b| b.bound_norm)),
            a_n,
            opt(self.tail.map(|t| t.a_n_err)),
            self.status
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOutput {
    pub s: f64,
    pub v: f64,
    pub u: f64,
    pub q_means: QMeans,
    pub relation_holds: bool,
    pub records: Vec<ScanRecord>,
}

impl ScanOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(ScanRecord::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }
}

/// Absolute slack when comparing log-quantities that may agree exactly.
const CHECK_SLACK: f64 = 1e-9;
/// Burn-in blocks for the Q-mean estimate.
const Q_MEAN_BURN_IN: usize = 200;
/// Extra blocks sampled beyond what the largest scale needs.
const BLOCK_MARGIN: usize = 4;

/// Runs the scan. Invalid configurations fail up front; failures at one
/// scale are recorded in that record's status.
pub fn oscillation_scan(dist: &EnvDistribution, config: &ScanConfig, par: Parallelism) -> Result<ScanOutput> {
    let s = dist.solve_s(1e-12)?;
    let v = dist.speed()?;
    config.validate(s, v)?;
    let u = config.resolved_u(v);
    let q_means = estimate_q_means(dist, config.q_mean_blocks, Q_MEAN_BURN_IN, config.seed.wrapping_add(1))?;
    let e_beta = q_means.beta0.mean;
    let relation_holds = config.relation_holds(e_beta);

    let mut plan = Vec::new();
    let mut records: Vec<Option<ScanRecord>> = Vec::new();
    for (k, n) in config.scales() {
        match n.filter(|&n| n <= config.max_n) {
            Some(n) => {
                let p = ScaleParams::new(n, s, config.d, config.d0, config.delta, u)?;
                plan.push((records.len(), k, p));
                records.push(None);
            }
            None => records.push(Some(ScanRecord::failed(
                k,
                n.unwrap_or(u64::MAX),
                format!("skipped:n_above_{}", config.max_n),
            ))),
        }
    }
    let left = plan
        .iter()
        .map(|(_, _, p)| (p.half_width as usize + 1) * p.a)
        .max()
        .unwrap_or(1)
        + BLOCK_MARGIN;
    let right = plan
        .iter()
        .map(|(_, _, p)| ((p.half_width as usize + 1) * p.a).max(p.n as usize))
        .max()
        .unwrap_or(1)
        + BLOCK_MARGIN;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (window, decomp) = QBlockSampler::default().sample_q_environment(dist, left, right, &mut rng)?;

    let ctx = ScaleContext {
        window: &window,
        decomp: &decomp,
        config,
        e_beta,
        relation_holds,
        s,
    };
    let computed = map_indexed(plan.len(), par, |t| {
        let (_, k, p) = &plan[t];
        ctx.record(*k, p.clone())
    });
    for ((slot, _, _), rec) in plan.iter().zip(computed) {
        records[*slot] = Some(rec);
    }
    Ok(ScanOutput {
        s,
        v,
        u,
        q_means,
        relation_holds,
        records: records.into_iter().flatten().collect(),
    })
}

/// `A(n) = log P_ω(T_{ν_n} > u·ν_n) / n^{1-1/s}` for the walk started at 0
/// and reflected at `reflection`: exact DP when `states × horizon` fits in
/// `dp_budget`, otherwise `mc_reps` walks.
pub fn slowdown_statistic(
    window: &EnvironmentWindow,
    p: &ScaleParams,
    reflection: i64,
    nu_n: i64,
    dp_budget: f64,
    mc_reps: u64,
    seed: u64,
) -> Result<TailValue> {
    let env = window.reflect_at(reflection)?;
    let threshold = (p.u * nu_n as f64).floor();
    let norm = p.normalizer();
    let cost = (nu_n - reflection + 1) as f64 * threshold;
    if cost <= dp_budget {
        let log_p = log_tail_at(&env, 0, nu_n, &[threshold as usize])?[0];
        return Ok(TailValue {
            kind: TailKind::Exact,
            log_p,
            a_n: log_p / norm,
            a_n_err: 0.0,
        });
    }
    let est = estimate_hitting_tail_mc(&env, 0, nu_n, threshold as u64, mc_reps, Parallelism::Sequential, seed)?;
    Ok(match est.zero_upper {
        Some(upper) => TailValue {
            kind: TailKind::MonteCarloZero,
            log_p: upper.ln(),
            a_n: upper.ln() / norm,
            a_n_err: 0.0,
        },
        None => TailValue {
            kind: TailKind::MonteCarlo,
            log_p: est.p_hat.ln(),
            a_n: est.p_hat.ln() / norm,
            a_n_err: est.std_err / est.p_hat / norm,
        },
    })
}

struct ScaleContext<'a> {
    window: &'a EnvironmentWindow,
    decomp: &'a LadderDecomposition,
    config: &'a ScanConfig,
    e_beta: f64,
    relation_holds: bool,
    s: f64,
}

impl ScaleContext<'_> {
    fn record(&self, k: Option<u32>, p: ScaleParams) -> ScanRecord {
        let n = p.n;
        match self.try_record(k, p) {
            Ok(r) => r,
            Err(e) => ScanRecord::failed(k, n, format!("error:{}", e.to_string().replace(',', ";"))),
        }
    }

    fn try_record(&self, k: Option<u32>, p: ScaleParams) -> Result<ScanRecord> {
        let seq = Parallelism::Sequential;
        let sb = coarse_grain(self.decomp, p.a)?;
        let report = condition_check(self.window, &sb, &p, self.e_beta, self.config.eps1, seq)?;
        let origin = self.decomp.origin_block.unwrap_or(0);
        if origin + p.n as usize > self.decomp.num_blocks() {
            return Err(Error::InsufficientBlocks {
                needed: origin + p.n as usize,
                available: self.decomp.num_blocks(),
            });
        }
        let nu_n = self.decomp.nu(origin + p.n as usize);
        let labels = classify_hills(self.decomp, p.n as f64, self.s, self.config.eps)?;
        let per_sb = big_hills_per_superblock(&sb, &labels);
        let in_range = |j: i64| (-p.half_width..=p.half_width).contains(&j);
        let counts: Vec<usize> = (sb.first..sb.last())
            .zip(per_sb)
            .filter(|(j, _)| in_range(*j))
            .map(|(_, c)| c)
            .collect();
        let big_hills = counts.iter().sum();
        let multi_big = counts.iter().filter(|&&c| c >= 2).count();

        let mut status = Vec::new();
        let bound = if report.cond_mgf {
            Some(chebyshev_bound(self.window, &p, &report, nu_n, seq)?)
        } else {
            status.push("condition_fails".to_string());
            None
        };
        let reflection = sb.nu(-p.half_width - 1)?;
        let tail = slowdown_statistic(
            self.window,
            &p,
            reflection,
            nu_n,
            self.config.dp_budget,
            self.config.mc_reps,
            self.config.seed.wrapping_add(p.n),
        )?;
        status.push(
            match tail.kind {
                TailKind::Exact => "dp",
                TailKind::MonteCarlo => "mc",
                TailKind::MonteCarloZero => "mc_zero_count",
            }
            .to_string(),
        );
        let checks = self.checks(&report, bound.as_ref(), &tail);
        if !checks.all_hold() {
            status.push("check_failed".to_string());
        }
        Ok(ScanRecord {
            k,
            n: p.n,
            nu_n: Some(nu_n),
            cond_ex1: Some(report.cond_ex1),
            cond_mgf: Some(report.cond_mgf),
            max_beta_sum: Some(report.max_far),
            ex1_threshold: Some(report.ex1_threshold),
            mgf_threshold: Some(report.mgf_threshold),
            big_hills: Some(big_hills),
            multi_big: Some(multi_big),
            bound,
            tail: Some(tail),
            checks: Some(checks),
            status: status.join(";"),
            params: Some(p),
        })
    }

    fn checks(&self, report: &ConditionReport, bound: Option<&ChebyshevBound>, tail: &TailValue) -> RecordChecks {
        let le = |a: f64, b: f64| a <= b + CHECK_SLACK * b.abs().max(1.0);
        RecordChecks {
            tail_le_bound: match (bound, tail.kind) {
                (Some(b), TailKind::Exact) => Some(le(tail.log_p, b.log_bound)),
                _ => None,
            },
            exact_le_closed_form: bound.map(|b| le(b.log_mgf_exact, b.log_mgf_bound)),
            implication: !(report.cond_ex1 && self.relation_holds) || report.cond_mgf,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_literal_scales() {
        let g = GeometricGrid {
            n_min: 10,
            n_max: 1000,
            points: 3,
        };
        assert_eq!(g.values(), vec![10, 100, 1000]);
        let c = ScanConfig {
            k_range: vec![0, 1, 2],
            geometric: None,
            ..ScanConfig::default()
        };
        assert_eq!(
            c.scales(),
            vec![(Some(0), Some(3)), (Some(1), Some(27)), (Some(2), Some(19_683))]
        );
    }

    #[test]
    fn validation() {
        let c = ScanConfig::default();
        assert!(c.validate(2.0, 1.0 / 9.0).is_ok());
        assert!(ScanConfig { m: 2, ..c.clone() }.validate(2.0, 1.0 / 9.0).is_err());
        assert!(ScanConfig {
            u: Some(5.0),
            ..c.clone()
        }
        .validate(2.0, 1.0 / 9.0)
        .is_err());
        assert!(ScanConfig { eps: 0.3, ..c.clone() }.validate(2.0, 1.0 / 9.0).is_err());
    }

    #[test]
    fn small_scan_is_consistent_and_reproducible() {
        let d = EnvDistribution::canonical_two_point();
        let c = ScanConfig {
            k_range: vec![0, 1],
            geometric: Some(GeometricGrid {
                n_min: 30,
                n_max: 120,
                points: 3,
            }),
            q_mean_blocks: 20_000,
            ..ScanConfig::default()
        };
        let a = oscillation_scan(&d, &c, Parallelism::Threads(0)).unwrap();
        let b = oscillation_scan(&d, &c, Parallelism::Sequential).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.records.len(), 5);
        for r in &a.records {
            let t = r.tail.expect(&r.status);
            assert!(t.a_n <= 0.0);
            assert!(r.checks.unwrap().all_hold(), "{r:?}");
        }
    }

    #[test]
    fn slowdown_factor_below_one_gives_certain_tail() {
        let d = EnvDistribution::canonical_two_point();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (w, dec) = QBlockSampler::default()
            .sample_q_environment(&d, 20, 60, &mut rng)
            .unwrap();
        let p = ScaleParams::new(50, 2.0, 4.0, 0.05, 0.3, 0.5).unwrap();
        let nu_n = dec.nu(20 + 50);
        for budget in [1e12, 0.0] {
            let t = slowdown_statistic(&w, &p, dec.nu(0), nu_n, budget, 500, 1).unwrap();
            assert_eq!(t.log_p, 0.0);
            assert_eq!(t.a_n, 0.0);
        }
    }
}

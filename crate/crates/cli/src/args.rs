use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "rwre",
    version,
    about = "Random walks in random environments: exact quenched quantities and experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Built-in environment law: canonical2pt or canonical3pt.
    #[arg(long, default_value = "canonical2pt")]
    pub dist: String,
    /// TOML law file (`name = "..."`, `atoms = [[omega, weight], ...]`); overrides --dist.
    #[arg(long)]
    pub dist_file: Option<PathBuf>,
    /// Master seed; required by every stochastic computation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (1 runs sequentially).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Write results here instead of stdout.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// A quenched window, read from file or sampled from the law.
#[derive(Debug, Clone, Args, Serialize)]
pub struct WindowArgs {
    /// Window file in the `rwre-env v1` text format.
    #[arg(long)]
    pub env_file: Option<PathBuf>,
    /// Number of sites to sample on `0..len` (site 0 reflecting) when no file is given.
    #[arg(long, default_value_t = 50)]
    pub len: usize,
}

/// Ladder blocks, read from a window file or sampled under Q.
#[derive(Debug, Clone, Args, Serialize)]
pub struct BlockArgs {
    /// Window file; its ladder decomposition is used.
    #[arg(long)]
    pub env_file: Option<PathBuf>,
    /// Number of Q-blocks to sample when no file is given.
    #[arg(long, default_value_t = 20)]
    pub blocks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailStat {
    /// Block heights M_i.
    M,
    /// Window-β crossing times.
    Beta,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tail exponent s solving E[rho^s] = 1.
    SolveS(SolveS),
    /// Asymptotic speed, optionally checked by annealed simulation.
    Speed(Speed),
    /// Sample an environment window.
    SampleEnv(SampleEnv),
    /// Ladder points and block heights.
    Ladder(Ladder),
    /// Block crossing times and their decomposition.
    Beta(Beta),
    /// Exact crossing MGF with its closed-form bound and linear-system value.
    Mgf(Mgf),
    /// Per-step MGF bounds along a window.
    MgfBound(MgfBound),
    /// Probability of exiting an interval on the right.
    ExitProb(ExitProb),
    /// Survival function of a hitting time by exact dynamic programming.
    FirstPassage(FirstPassage),
    /// Slowdown probability P(X_n < v n).
    Slowdown(Slowdown),
    /// Super-block birth-death trace of one walk.
    TraceBd(TraceBd),
    /// Big/small hill statistics at scale n.
    Hills(Hills),
    /// Tail-index estimate for block heights or crossing times.
    TailHill(TailHill),
    /// Truncated block-sum statistics across sampled environments.
    TruncatedSums(TruncatedSums),
    /// Normalized slowdown statistic over scales, with conditions and bounds.
    Scan(Scan),
}

#[derive(Debug, Args, Serialize)]
pub struct SolveS {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Root tolerance.
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct Speed {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Steps per simulated walk; no simulation when absent.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Independent simulated walks.
    #[arg(long, default_value_t = 64)]
    pub reps: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleEnv {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Sites on `0..len` drawn i.i.d. from the law.
    #[arg(long, default_value_t = 50)]
    pub len: usize,
    /// Sample this many Q-blocks instead of i.i.d. sites.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Q-blocks placed left of the origin.
    #[arg(long, default_value_t = 0)]
    pub left_blocks: usize,
    /// Do not make the leftmost site reflecting.
    #[arg(long)]
    pub no_reflect: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct Ladder {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: BlockArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct Beta {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: BlockArgs,
    /// Context c: the truncated crossing reflects c-1 blocks to the left.
    #[arg(long, default_value_t = 3)]
    pub context: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct Mgf {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    /// Tilt λ.
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    /// Start site; defaults to the reflection site.
    #[arg(long)]
    pub k0: Option<i64>,
    /// Target site; defaults to one past the window.
    #[arg(long)]
    pub k1: Option<i64>,
}

#[derive(Debug, Args, Serialize)]
pub struct MgfBound {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value_t = 0.05)]
    pub lambda: f64,
    /// Last step `n → n+1` covered; defaults to the window end.
    #[arg(long)]
    pub n: Option<i64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExitProb {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub a: i64,
    #[arg(long)]
    pub x: i64,
    #[arg(long)]
    pub b: i64,
}

#[derive(Debug, Args, Serialize)]
pub struct FirstPassage {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub window: WindowArgs,
    /// Start site; defaults to the reflection site.
    #[arg(long)]
    pub start: Option<i64>,
    /// Target site; defaults to one past the window.
    #[arg(long)]
    pub target: Option<i64>,
    /// Last tabulated time.
    #[arg(long, default_value_t = 1000)]
    pub horizon: usize,
    /// Tabulate every this many steps.
    #[arg(long, default_value_t = 10)]
    pub every: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct Slowdown {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Window file; otherwise sites `-n..=n` are sampled.
    #[arg(long)]
    pub env_file: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Velocity threshold; defaults to half the speed.
    #[arg(long)]
    pub v: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub start: i64,
    /// Monte Carlo walks for comparison; none when absent.
    #[arg(long)]
    pub reps: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScaleArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    /// Super-block divisor: a = n^{1/s}/D.
    #[arg(long = "D", default_value_t = 1.0)]
    pub d: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TraceBd {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub scale: ScaleArgs,
    /// Walk steps before giving up.
    #[arg(long, default_value_t = 100_000_000)]
    pub step_cap: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct Hills {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[command(flatten)]
    #[serde(flatten)]
    pub scale: ScaleArgs,
    /// Hill threshold exponent: big iff M > n^{(1-eps)/s}.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub blocks: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TailHill {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = TailStat::M)]
    pub stat: TailStat,
    #[arg(long, default_value_t = 1_000_000)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0.01)]
    pub top_fraction: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TruncatedSums {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1000.0)]
    pub n: f64,
    /// a_n = n^{eta1}.
    #[arg(long, default_value_t = 0.8)]
    pub eta1: f64,
    /// b_n = n^{eta2}.
    #[arg(long, default_value_t = 0.3)]
    pub eta2: f64,
    /// Independent Q-environments.
    #[arg(long, default_value_t = 100)]
    pub envs: usize,
    /// Exceedance level: centered sum > eps·a_n.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Blocks for the Q-mean of β.
    #[arg(long, default_value_t = 100_000)]
    pub q_blocks: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct Scan {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// TOML scan configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<u32>,
    /// Literal scales k = 0..=k_max.
    #[arg(long)]
    pub k_max: Option<u32>,
    #[arg(long = "D")]
    pub d: Option<f64>,
    #[arg(long = "D0")]
    pub d0: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub eps1: Option<f64>,
    #[arg(long)]
    pub reps: Option<u64>,
    /// Geometric grid bounds and size.
    #[arg(long)]
    pub n_min: Option<u64>,
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub points: Option<usize>,
}

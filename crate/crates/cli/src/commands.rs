use std::path::Path;

use serde::Serialize;

use rwre_core::env::{
    ladder_points, sample_alpha_window, DistributionSpec, EnvDistribution, Environment, EnvironmentWindow,
    LadderDecomposition, QBlockSampler,
};
use rwre_core::experiments::{
    big_hills_per_superblock, birth_death_trace, classify_hills, coarse_grain, estimate_q_means, hill_tail_estimate,
    oscillation_scan, simulate_speed, truncated_sum_stats, GeometricGrid, Hill, ScaleParams, ScanConfig,
    SecondMomentRegime, TailMethod, TruncationParams,
};
use rwre_core::par::Parallelism;
use rwre_core::passage::{
    batch_rng, estimate_slowdown_mc, hitting_tail_exact, mgf_linear_oracle, slowdown_exact, tail_sum, DEFAULT_MASS_TOL,
    DEFAULT_STEP_CAP,
};
use rwre_core::quenched::{
    beta_block, exit_prob, exit_prob_left, expected_hitting, lambda_max, mgf_exact, mgf_per_step_bound,
    mgf_upper_bound_log, window_betas, BoundValue, MgfExact,
};
use rwre_core::Error;

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::output::{num, Report};

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::SolveS(a) => solve_s(a),
        Command::Speed(a) => speed(a),
        Command::SampleEnv(a) => sample_env(a),
        Command::Ladder(a) => ladder(a),
        Command::Beta(a) => beta(a),
        Command::Mgf(a) => mgf(a),
        Command::MgfBound(a) => mgf_bound(a),
        Command::ExitProb(a) => exit_probability(a),
        Command::FirstPassage(a) => first_passage(a),
        Command::Slowdown(a) => slowdown(a),
        Command::TraceBd(a) => trace_bd(a),
        Command::Hills(a) => hills(a),
        Command::TailHill(a) => tail_hill(a),
        Command::TruncatedSums(a) => truncated_sums(a),
        Command::Scan(a) => scan(a),
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load_dist(c: &Common) -> CliResult<EnvDistribution> {
    if let Some(path) = &c.dist_file {
        let spec: DistributionSpec =
            toml::from_str(&read_file(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        return Ok(EnvDistribution::from_spec(&spec)?);
    }
    EnvDistribution::named(&c.dist).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown distribution {:?}; use canonical2pt, canonical3pt or --dist-file",
            c.dist
        ))
    })
}

fn require_seed(c: &Common, what: &str) -> CliResult<u64> {
    c.seed
        .ok_or_else(|| CliError::Usage(format!("{what} is stochastic: pass --seed")))
}

fn par(c: &Common) -> Parallelism {
    Parallelism::from_workers(c.workers)
}

/// Header with the subcommand configuration and the resolved law.
fn report<C: Serialize>(command: &str, config: &C, dist: &EnvDistribution) -> CliResult<Report> {
    let mut r = Report::new(command, config)?;
    let atoms: Vec<String> = dist
        .atoms()
        .iter()
        .map(|a| format!("[{}, {}]", num(a.omega), num(a.weight)))
        .collect();
    r.meta("law", format!("{} atoms = [{}]", dist.name(), atoms.join(", ")));
    Ok(r)
}

/// The window from `--env-file`, or `0..len` sampled with site 0 reflecting.
fn load_window(c: &Common, w: &WindowArgs, dist: &EnvDistribution) -> CliResult<EnvironmentWindow> {
    if let Some(path) = &w.env_file {
        return Ok(EnvironmentWindow::from_text(&read_file(path)?)?);
    }
    if w.len == 0 {
        return Err(CliError::Usage("--len must be positive".into()));
    }
    let seed = require_seed(c, "sampling a window")?;
    let sampled = sample_alpha_window(dist, 0, w.len as i64 - 1, &mut batch_rng(seed, 0))?;
    Ok(sampled.with_reflection(0)?)
}

/// Ladder decomposition from a file window, or `blocks` sampled Q-blocks.
fn load_blocks(
    c: &Common,
    b: &BlockArgs,
    dist: &EnvDistribution,
) -> CliResult<(EnvironmentWindow, LadderDecomposition)> {
    if let Some(path) = &b.env_file {
        let w = EnvironmentWindow::from_text(&read_file(path)?)?;
        let start = reflection_or_lo(&w);
        let d = ladder_points(&w, start, w.hi() + 1)?;
        return Ok((w, d));
    }
    let seed = require_seed(c, "sampling Q-blocks")?;
    Ok(QBlockSampler::default().sample_q_blocks(dist, b.blocks, &mut batch_rng(seed, 0))?)
}

fn reflection_or_lo(w: &EnvironmentWindow) -> i64 {
    w.reflection().unwrap_or(w.lo())
}

fn solve_s(a: SolveS) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let s = dist.solve_s(a.tol)?;
    let mut r = report("solve-s", &a, &dist)?;
    // Round to the decimals the tolerance certifies; the raw root follows.
    let digits = (-a.tol.log10()).floor().clamp(0.0, 15.0) as i32 - 1;
    let scale = 10f64.powi(digits.max(0));
    r.line("s,s_raw,residual,mean_log_rho,lattice_span");
    r.row(&[
        num((s * scale).round() / scale),
        num(s),
        num(dist.rho_moment(s) - 1.0),
        num(dist.mean_log_rho()),
        dist.lattice_span().map_or_else(|| "none".to_string(), num),
    ]);
    r.emit(a.common.out.as_deref())
}

fn speed(a: Speed) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let v = dist.speed()?;
    let mut r = report("speed", &a, &dist)?;
    r.line("v,mean_rho");
    r.row(&[num(v), num(dist.mean_rho())]);
    if let Some(steps) = a.steps {
        let seed = require_seed(&a.common, "speed simulation")?;
        let e = simulate_speed(&dist, steps, a.reps, seed, par(&a.common))?;
        let z = if e.std_err > 0.0 {
            (e.mean - v).abs() / e.std_err
        } else {
            0.0
        };
        r.line("simulated_mean,std_err,z");
        r.row(&[num(e.mean), num(e.std_err), num(z)]);
    }
    r.emit(a.common.out.as_deref())
}

fn sample_env(a: SampleEnv) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let seed = require_seed(&a.common, "sample-env")?;
    let mut rng = batch_rng(seed, 0);
    let window = match a.blocks {
        Some(blocks) => {
            QBlockSampler::default()
                .sample_q_environment(&dist, a.left_blocks, blocks, &mut rng)?
                .0
        }
        None => {
            if a.len == 0 {
                return Err(CliError::Usage("--len must be positive".into()));
            }
            sample_alpha_window(&dist, 0, a.len as i64 - 1, &mut rng)?
        }
    };
    let window = if a.no_reflect {
        window
    } else {
        window.with_reflection(window.lo())?
    };
    let mut r = report("sample-env", &a, &dist)?;
    r.raw(&window.to_text());
    r.emit(a.common.out.as_deref())
}

fn ladder(a: Ladder) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let (_, d) = load_blocks(&a.common, &a.source, &dist)?;
    let mut r = report("ladder", &a, &dist)?;
    r.meta("num_blocks", d.num_blocks());
    r.line("i,nu,length,log_height");
    for i in 0..d.num_blocks() {
        r.row(&[
            i.to_string(),
            d.nu(i).to_string(),
            d.lengths[i].to_string(),
            num(d.log_heights[i]),
        ]);
    }
    r.emit(a.common.out.as_deref())
}

fn beta(a: Beta) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    if a.context == 0 {
        return Err(CliError::Usage("--context must be at least 1".into()));
    }
    let (w, d) = load_blocks(&a.common, &a.source, &dist)?;
    let betas = window_betas(&w, &d)?;
    let mut r = report("beta", &a, &dist)?;
    r.line("i,start,end,beta_window,beta_trunc,w_within,r_block,w_context,truncation_gap,decomposition_residual");
    for (i, bw) in betas.iter().enumerate() {
        let (s, e) = d.block(i);
        let mut cells = vec![i.to_string(), s.to_string(), e.to_string(), num(*bw)];
        if i + 1 >= a.context {
            let q = beta_block(&w, &d, i, a.context)?;
            cells.extend([
                num(q.beta_trunc),
                num(q.w_within),
                num(q.r_block),
                num(q.w_context),
                num(q.truncation_gap),
                num(q.decomposition_residual()),
            ]);
        } else {
            cells.extend(std::iter::repeat_n("NA".to_string(), 6));
        }
        r.row(&cells);
    }
    r.emit(a.common.out.as_deref())
}

fn mgf(a: Mgf) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let w = load_window(&a.common, &a.window, &dist)?;
    let env = w.reflected()?;
    let k0 = a.k0.unwrap_or(env.site());
    let k1 = a.k1.unwrap_or(w.hi() + 1);
    let exact = match mgf_exact(&env, k0, k1, a.lambda)? {
        MgfExact::Finite { log_value } => num(log_value),
        MgfExact::Diverged { site } => format!("diverged@{site}"),
    };
    let bound = match mgf_upper_bound_log(&env, k0, k1, a.lambda)? {
        BoundValue::Finite { log_value } => num(log_value),
        BoundValue::ConditionViolated { margin } => format!("condition_violated({})", num(margin)),
    };
    let oracle = match mgf_linear_oracle(&env, k0, k1, a.lambda) {
        Ok(v) => num(v.ln()),
        Err(Error::NoBoundedSolution { site }) => format!("no_bounded_solution@{site}"),
        Err(e) => return Err(e.into()),
    };
    let mut r = report("mgf", &a, &dist)?;
    r.meta("reflection", env.site());
    r.line("k0,k1,lambda,lambda_max,expected_hitting,log_mgf_exact,log_mgf_bound,log_mgf_linear");
    r.row(&[
        k0.to_string(),
        k1.to_string(),
        num(a.lambda),
        num(lambda_max(&env, k1)?),
        num(expected_hitting(&env, k0, k1)?),
        exact,
        bound,
        oracle,
    ]);
    r.emit(a.common.out.as_deref())
}

fn mgf_bound(a: MgfBound) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let w = load_window(&a.common, &a.window, &dist)?;
    let env = w.reflected()?;
    let n = a.n.unwrap_or(w.hi());
    let mut r = report("mgf-bound", &a, &dist)?;
    r.line("k,log_step_mgf_exact,log_step_bound");
    for k in env.site()..=n {
        let exact = match mgf_exact(&env, k, k + 1, a.lambda)? {
            MgfExact::Finite { log_value } => num(log_value),
            MgfExact::Diverged { site } => format!("diverged@{site}"),
        };
        let bound = mgf_per_step_bound(&env, k, n, a.lambda)?;
        r.row(&[k.to_string(), exact, num(bound.ln())]);
    }
    r.emit(a.common.out.as_deref())
}

fn exit_probability(a: ExitProb) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let w = load_window(&a.common, &a.window, &dist)?;
    let right = exit_prob(&w, a.a, a.x, a.b)?;
    let left = exit_prob_left(&w, a.a, a.x, a.b)?;
    let mut r = report("exit-prob", &a, &dist)?;
    r.line("p_right,p_left");
    r.row(&[num(right), num(left)]);
    r.emit(a.common.out.as_deref())
}

fn first_passage(a: FirstPassage) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let w = load_window(&a.common, &a.window, &dist)?;
    let env = w.reflected()?;
    let start = a.start.unwrap_or(env.site());
    let target = a.target.unwrap_or(w.hi() + 1);
    let every = a.every.max(1);
    let table = hitting_tail_exact(&env, start, target, a.horizon, &[])?;
    let sum = tail_sum(&env, start, target, DEFAULT_MASS_TOL, DEFAULT_STEP_CAP)?;
    let mut r = report("first-passage", &a, &dist)?;
    r.meta("expected_hitting", num(expected_hitting(&env, start, target)?));
    r.meta("tail_sum", num(sum.sum));
    r.meta("tail_sum_truncated", sum.truncated);
    r.meta("conservation_error", num(table.conservation_error));
    r.line("t,log_survival");
    for t in (0..=a.horizon).step_by(every) {
        r.row(&[t.to_string(), num(table.log_survival[t])]);
    }
    r.emit(a.common.out.as_deref())
}

fn slowdown(a: Slowdown) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let w = match &a.env_file {
        Some(path) => EnvironmentWindow::from_text(&read_file(path)?)?,
        None => {
            let seed = require_seed(&a.common, "sampling a window")?;
            let n = a.n as i64;
            sample_alpha_window(&dist, a.start - n, a.start + n, &mut batch_rng(seed, 0))?
        }
    };
    let v = match a.v {
        Some(v) => v,
        None => dist.speed()? / 2.0,
    };
    let log_p = slowdown_exact(&w, a.start, a.n, v)?;
    let mut r = report("slowdown", &a, &dist)?;
    r.meta("v", num(v));
    r.line("log_p_exact,p_exact");
    r.row(&[num(log_p), num(log_p.exp())]);
    if let Some(reps) = a.reps {
        let seed = require_seed(&a.common, "Monte Carlo slowdown")?;
        let e = estimate_slowdown_mc(&w, a.start, a.n as u64, v, reps, par(&a.common), seed.wrapping_add(1))?;
        r.line("p_hat,std_err,zero_count_upper");
        r.row(&[
            num(e.p_hat),
            num(e.std_err),
            e.zero_upper.map_or_else(|| "NA".to_string(), num),
        ]);
    }
    r.emit(a.common.out.as_deref())
}

/// `(s, window, decomposition)` for a two-sided Q-environment that covers
/// super-blocks `-J-1 ..= J+1` at scale `n`.
fn scale_environment(
    dist: &EnvDistribution,
    p: &ScaleParams,
    seed: u64,
) -> CliResult<(EnvironmentWindow, LadderDecomposition)> {
    let side = (p.half_width as usize + 2) * p.a;
    let right = side.max(p.n as usize + p.a);
    Ok(QBlockSampler::default().sample_q_environment(dist, side, right, &mut batch_rng(seed, 0))?)
}

fn trace_bd(a: TraceBd) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let seed = require_seed(&a.common, "trace-bd")?;
    let s = dist.solve_s(1e-12)?;
    let defaults = ScanConfig::default();
    let p = ScaleParams::new(
        a.scale.n,
        s,
        a.scale.d,
        defaults.d0,
        defaults.delta,
        2.0 / dist.speed()?,
    )?;
    let (w, d) = scale_environment(&dist, &p, seed)?;
    let w = w.with_reflection(w.lo())?;
    let sb = coarse_grain(&d, p.a)?;
    let origin = d.origin_block.unwrap_or(0);
    let target = d.nu(origin + p.n as usize);
    let level = p.n as f64 / p.a as f64;
    let t = birth_death_trace(&w, &sb, level, target, batch_rng(seed, 1), a.step_cap)?;
    let mut r = report("trace-bd", &a, &dist)?;
    r.meta("a", p.a);
    r.meta("level", num(level));
    r.meta("N", t.n_hit);
    r.meta("N_exit", t.n_exit);
    r.meta("left_steps", t.left_steps);
    r.meta("target_site", target);
    r.meta(
        "target_time",
        t.target_time.map_or_else(|| "NA".to_string(), |x| x.to_string()),
    );
    r.meta("total_time", t.total_time());
    r.line("j,departures,left,left_frequency,left_probability");
    let mut visits = t.visits.clone();
    visits.sort_by_key(|v| v.j);
    for v in &visits {
        let predicted = exit_prob_left(&w, sb.nu(v.j - 1)?, sb.nu(v.j)?, sb.nu(v.j + 1)?)?;
        r.row(&[
            v.j.to_string(),
            v.departures.to_string(),
            v.left.to_string(),
            num(v.left as f64 / v.departures as f64),
            num(predicted),
        ]);
    }
    r.line("i,z,theta");
    for (i, z) in t.z.iter().enumerate() {
        let theta = if i == 0 {
            "NA".to_string()
        } else {
            t.theta[i - 1].to_string()
        };
        r.row(&[i.to_string(), z.to_string(), theta]);
    }
    r.emit(a.common.out.as_deref())
}

fn hills(a: Hills) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let seed = require_seed(&a.common, "hills")?;
    let s = dist.solve_s(1e-12)?;
    let (_, d) = QBlockSampler::default().sample_q_blocks(&dist, a.blocks, &mut batch_rng(seed, 0))?;
    let n = a.scale.n as f64;
    let labels = classify_hills(&d, n, s, a.eps)?;
    let big = labels.iter().filter(|&&h| h == Hill::Big).count();
    let freq = big as f64 / labels.len() as f64;
    let a_blocks = ((n.powf(1.0 / s) / a.scale.d).floor() as usize).max(1);
    let sb = coarse_grain(&d, a_blocks)?;
    let per = big_hills_per_superblock(&sb, &labels);
    let multi = per.iter().filter(|&&c| c >= 2).count();
    let mut r = report("hills", &a, &dist)?;
    r.meta("s", num(s));
    r.line("log_threshold,big,small,big_frequency,big_frequency_se,a,superblocks,multi_big,multi_big_frequency");
    r.row(&[
        num((1.0 - a.eps) / s * n.ln()),
        big.to_string(),
        (labels.len() - big).to_string(),
        num(freq),
        num((freq * (1.0 - freq) / labels.len() as f64).sqrt()),
        a_blocks.to_string(),
        per.len().to_string(),
        multi.to_string(),
        num(multi as f64 / per.len().max(1) as f64),
    ]);
    r.emit(a.common.out.as_deref())
}

fn tail_hill(a: TailHill) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let seed = require_seed(&a.common, "tail-hill")?;
    const BURN_IN: usize = 200;
    let samples: Vec<f64> = match a.stat {
        TailStat::M => {
            let (_, d) = QBlockSampler::default().sample_q_blocks(&dist, a.blocks, &mut batch_rng(seed, 0))?;
            d.heights.into_iter().filter(|&h| h > 0.0).collect()
        }
        TailStat::Beta => {
            let (w, d) =
                QBlockSampler::default().sample_q_blocks(&dist, a.blocks + BURN_IN, &mut batch_rng(seed, 0))?;
            window_betas(&w, &d)?.split_off(BURN_IN)
        }
    };
    let t = hill_tail_estimate(&samples, a.top_fraction)?;
    let method = match t.method {
        TailMethod::Hill => "hill".to_string(),
        TailMethod::LatticeGeometric { span } => format!("lattice-geometric(span={})", num(span)),
    };
    let mut r = report("tail-hill", &a, &dist)?;
    r.line("index,ci_low,ci_high,exceedances,method,hill");
    r.row(&[
        num(t.index),
        num(t.ci_low),
        num(t.ci_high),
        t.exceedances.to_string(),
        method,
        num(t.hill),
    ]);
    r.emit(a.common.out.as_deref())
}

fn truncated_sums(a: TruncatedSums) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let seed = require_seed(&a.common, "truncated-sums")?;
    let s = dist.solve_s(1e-12)?;
    let params = TruncationParams::from_exponents(a.n, a.eta1, a.eta2)?;
    let q = estimate_q_means(&dist, a.q_blocks, 200, seed)?;
    let beta_bar = q.beta0.mean;
    // Window-β needs left context beyond the c_n blocks of the truncation.
    let lead = 200;
    let params = TruncationParams {
        first_block: params.first_block + lead,
        ..params
    };
    let rows = rwre_core::par::map_indexed(a.envs, par(&a.common), |e| {
        let mut rng = batch_rng(seed, e as u64 + 1);
        let (w, d) = QBlockSampler::default().sample_q_blocks(&dist, params.blocks_needed(), &mut rng)?;
        truncated_sum_stats(&w, &d, &params, beta_bar)
    });
    let mut r = report("truncated-sums", &a, &dist)?;
    r.meta("a_n", params.count);
    r.meta("b_n", num(params.b_n));
    r.meta("c_n", params.c_n);
    r.meta("beta_bar", num(beta_bar));
    r.meta("beta_bar_se", num(q.beta0.std_err));
    r.meta(
        "second_moment_regime",
        format!("{:?}", SecondMomentRegime::for_exponent(s, 1e-9)),
    );
    r.meta(
        "regime_profile_at_b_n",
        num(SecondMomentRegime::for_exponent(s, 1e-9).profile(params.b_n)),
    );
    r.line("env,centered_sum,exceeds,truncation_diff,truncation_identity,kept,second_moment,zeta_sum,psi_sum");
    let mut exceed = 0usize;
    for (e, row) in rows.into_iter().enumerate() {
        let t = row?;
        let over = t.centered_sum > a.eps * params.count as f64;
        exceed += over as usize;
        r.row(&[
            e.to_string(),
            num(t.centered_sum),
            over.to_string(),
            num(t.truncation_diff),
            num(t.truncation_identity),
            t.kept.to_string(),
            num(t.second_moment),
            num(t.zeta_sum),
            num(t.psi_sum),
        ]);
    }
    r.meta("exceedance_frequency", num(exceed as f64 / a.envs.max(1) as f64));
    r.emit(a.common.out.as_deref())
}

fn scan(a: Scan) -> CliResult<()> {
    let dist = load_dist(&a.common)?;
    let mut config = match &a.config {
        Some(path) => {
            let text = read_file(path)?;
            toml::from_str::<ScanConfig>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => ScanConfig::default(),
    };
    let seed_in_file = match &a.config {
        Some(path) => read_file(path)?
            .parse::<toml::Table>()
            .map(|t| t.contains_key("seed"))
            .unwrap_or(false),
        None => false,
    };
    match a.common.seed {
        Some(seed) => config.seed = seed,
        None if seed_in_file => {}
        None => {
            return Err(CliError::Usage(
                "scan is stochastic: pass --seed or set seed in --config".into(),
            ))
        }
    }
    if let Some(m) = a.m {
        config.m = m;
    }
    if let Some(k) = a.k_max {
        config.k_range = (0..=k).collect();
    }
    macro_rules! set {
        ($($field:ident <- $flag:ident),*) => { $(if let Some(x) = a.$flag { config.$field = x; })* };
    }
    set!(d <- d, d0 <- d0, delta <- delta, eps <- eps, eps1 <- eps1, mc_reps <- reps);
    if a.u.is_some() {
        config.u = a.u;
    }
    if a.n_min.is_some() || a.n_max.is_some() || a.points.is_some() {
        let g = config.geometric.clone().unwrap_or(GeometricGrid {
            n_min: 40,
            n_max: 3000,
            points: 16,
        });
        config.geometric = Some(GeometricGrid {
            n_min: a.n_min.unwrap_or(g.n_min),
            n_max: a.n_max.unwrap_or(g.n_max),
            points: a.points.unwrap_or(g.points),
        });
    }
    let out = oscillation_scan(&dist, &config, par(&a.common))?;
    let mut r = report("scan", &config, &dist)?;
    r.meta("workers", a.common.workers);
    r.meta("s", num(out.s));
    r.meta("v", num(out.v));
    r.meta("u", num(out.u));
    r.meta(
        "E_Q_beta0",
        format!("{} +- {}", num(out.q_means.beta0.mean), num(out.q_means.beta0.std_err)),
    );
    r.meta(
        "E_Q_nu1",
        format!("{} +- {}", num(out.q_means.nu1.mean), num(out.q_means.nu1.std_err)),
    );
    r.meta("constant_relation", out.relation_holds);
    r.raw(&out.to_csv());
    r.emit(a.common.out.as_deref())
}

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rwre_core::env::{
    ladder_points, sample_alpha_window, sample_q_blocks, EnvDistribution, Environment, EnvironmentWindow,
};
use rwre_core::par::Parallelism;
use rwre_core::passage::{
    estimate_hitting_tail_mc, estimate_slowdown_mc, hitting_tail_exact, mgf_linear_oracle, position_distribution,
    tail_sum, DEFAULT_MASS_TOL, DEFAULT_STEP_CAP,
};
use rwre_core::quenched::{
    beta_block, exit_prob, exit_prob_left, expected_hitting, expected_hitting_double_sum, lambda_max, mgf_exact,
    mgf_per_step_bound, mgf_upper_bound_log, window_betas, BoundValue, MgfExact,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Site probabilities on `0..len`, site 0 reflecting.
fn window() -> impl Strategy<Value = EnvironmentWindow> {
    prop::collection::vec(0.35f64..=1.0, 1..30).prop_map(|mut om| {
        om[0] = 1.0;
        EnvironmentWindow::new(0, om, Some(0)).unwrap()
    })
}

fn dist() -> impl Strategy<Value = EnvDistribution> {
    prop_oneof![
        Just(EnvDistribution::canonical_two_point()),
        Just(EnvDistribution::canonical_three_point()),
    ]
}

fn log_mgf(env: &impl Environment, k0: i64, k1: i64, lambda: f64) -> Option<f64> {
    match mgf_exact(env, k0, k1, lambda).unwrap() {
        MgfExact::Finite { log_value } => Some(log_value),
        MgfExact::Diverged { .. } => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn recursion_matches_linear_system(w in window(), frac in 0.0f64..0.9, k0_frac in 0.0f64..1.0) {
        let env = w.reflected().unwrap();
        let k1 = w.hi() + 1;
        let k0 = (k0_frac * k1 as f64).floor() as i64;
        let lambda = frac * lambda_max(&env, k1).unwrap();
        let exact = log_mgf(&env, k0, k1, lambda).expect("finite below the admissible tilt");
        let linear = mgf_linear_oracle(&env, k0, k1, lambda).unwrap();
        prop_assert!(rel(exact.exp(), linear) < 1e-10, "{} vs {}", exact.exp(), linear);
    }

    #[test]
    fn exact_mgf_is_dominated_by_crossing_bound(w in window(), frac in 0.0f64..1.0, k0_frac in 0.0f64..1.0) {
        let env = w.reflected().unwrap();
        let k1 = w.hi() + 1;
        let k0 = (k0_frac * k1 as f64).floor() as i64;
        let lambda = frac * lambda_max(&env, k1).unwrap();
        let BoundValue::Finite { log_value: bound } = mgf_upper_bound_log(&env, k0, k1, lambda).unwrap() else {
            return Err(TestCaseError::fail("bound must apply below the admissible tilt"));
        };
        let exact = log_mgf(&env, k0, k1, lambda).unwrap();
        prop_assert!(exact <= bound + 1e-12 * bound.abs().max(1.0), "{exact} > {bound}");
    }

    #[test]
    fn per_step_mgf_is_dominated(w in window(), frac in 0.0f64..1.0, n_frac in 0.0f64..1.0) {
        let env = w.reflected().unwrap();
        let n = (n_frac * w.hi() as f64).floor() as i64;
        let lambda = frac * lambda_max(&env, n + 1).unwrap();
        for k in 0..=n {
            let exact = log_mgf(&env, k, k + 1, lambda).unwrap().exp();
            let bound = mgf_per_step_bound(&env, k, n, lambda).unwrap();
            prop_assert!(exact <= bound * (1.0 + 1e-12), "k={k}: {exact} > {bound}");
        }
    }

    #[test]
    fn log_mgf_derivative_at_zero_is_the_mean(w in window()) {
        let env = w.reflected().unwrap();
        let k1 = w.hi() + 1;
        let mean = expected_hitting(&env, 0, k1).unwrap();
        // Richardson extrapolation removes the variance term of K(h)/h.
        let h = 1e-5 / mean;
        let slope = |t: f64| log_mgf(&env, 0, k1, t).unwrap() / t;
        let d = 2.0 * slope(h) - slope(2.0 * h);
        prop_assert!(rel(d, mean) < 1e-6, "{d} vs {mean}");
    }

    #[test]
    fn expected_hitting_has_three_agreeing_forms(w in window(), k0_frac in 0.0f64..1.0) {
        let env = w.reflected().unwrap();
        let k1 = w.hi() + 1;
        let k0 = (k0_frac * k1 as f64).floor() as i64;
        let e = expected_hitting(&env, k0, k1).unwrap();
        prop_assert!(rel(e, expected_hitting_double_sum(&env, k0, k1).unwrap()) < 1e-8);
        let t = tail_sum(&env, k0, k1, DEFAULT_MASS_TOL, DEFAULT_STEP_CAP).unwrap();
        prop_assert!(!t.truncated);
        prop_assert!(rel(e, t.sum) < 1e-8, "{e} vs {}", t.sum);
    }

    #[test]
    fn dp_conserves_mass_and_survival_is_monotone(w in window(), horizon in 1usize..400) {
        let env = w.reflected().unwrap();
        let t = hitting_tail_exact(&env, 0, w.hi() + 1, horizon, &[]).unwrap();
        prop_assert!(t.conservation_error < 1e-12);
        for pair in t.log_survival.windows(2) {
            prop_assert!(pair[1] <= pair[0]);
        }
    }

    #[test]
    fn position_law_respects_parity(w in window(), n in 1usize..25) {
        // Pad so the window holds every reachable site.
        let wide = EnvironmentWindow::new(0, [w.omegas(), &[0.6; 30][..]].concat(), Some(0)).unwrap();
        let d = position_distribution(&wide.reflected().unwrap(), 0, n).unwrap();
        let mut total = 0.0;
        for x in 0..=n as i64 {
            let p = d.prob(x);
            if (x + n as i64) % 2 != 0 {
                prop_assert_eq!(p, 0.0);
            }
            total += p;
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exit_probabilities_are_complementary(w in window(), a in 0i64..10, gap in 2i64..20, x_frac in 0.0f64..1.0) {
        let b = (a + gap).min(w.hi());
        prop_assume!(b > a + 1);
        let x = a + 1 + (x_frac * (b - a - 1) as f64).floor() as i64;
        let r = exit_prob(&w, a, x, b).unwrap();
        let l = exit_prob_left(&w, a, x, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!((r + l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_text_round_trips(w in window()) {
        let back = EnvironmentWindow::from_text(&w.to_text()).unwrap();
        prop_assert_eq!(back.omegas(), w.omegas());
        prop_assert_eq!(back.reflection(), w.reflection());
        prop_assert_eq!(back.lo(), w.lo());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ladder_points_reconstruct_q_blocks(d in dist(), seed in any::<u64>(), blocks in 1usize..200) {
        let (w, decomp) = sample_q_blocks(&d, blocks, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let again = ladder_points(&w, decomp.nu(0), w.hi() + 1).unwrap();
        prop_assert_eq!(&again.nus, &decomp.nus);
        prop_assert_eq!(&again.lengths, &decomp.lengths);
        for (a, b) in again.log_heights.iter().zip(&decomp.log_heights) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn potential_descends_between_ladder_points(d in dist(), seed in any::<u64>(), len in 10i64..500) {
        let w = sample_alpha_window(&d, 0, len, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let decomp = ladder_points(&w, 0, len + 1).unwrap();
        for i in 0..decomp.num_blocks() {
            let (s, e) = decomp.block(i);
            let vs = w.potential(s).unwrap();
            if i + 1 < decomp.num_blocks() {
                prop_assert!(w.potential(e).unwrap() < vs);
            }
            for x in s + 1..e {
                prop_assert!(w.potential(x).unwrap() >= vs - 1e-9);
            }
        }
    }

    #[test]
    fn block_decomposition_and_monotone_truncation(d in dist(), seed in any::<u64>()) {
        let (w, decomp) = sample_q_blocks(&d, 30, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let all = window_betas(&w, &decomp).unwrap();
        for i in (0..decomp.num_blocks()).step_by(3) {
            let mut prev = 0.0;
            for c in 1..=i + 1 {
                let q = beta_block(&w, &decomp, i, c).unwrap();
                prop_assert!(q.decomposition_residual() < 1e-10);
                prop_assert!(q.gap_residual() < 1e-10);
                prop_assert!(q.beta_trunc >= prev * (1.0 - 1e-12));
                prop_assert!(q.beta_trunc <= all[i] * (1.0 + 1e-12));
                prop_assert!(q.beta_trunc >= q.length() as f64);
                prev = q.beta_trunc;
            }
            prop_assert!(rel(prev, all[i]) < 1e-12);
        }
    }

    #[test]
    fn tail_exponent_solves_moment_equation(
        r in 1.1f64..5.0,
        p in 0.05f64..0.45,
        extra in 0.05f64..0.9,
    ) {
        // ρ ∈ {r, extra, extra²}, weights chosen so E[log ρ] < 0.
        let pairs = [(r, p), (extra, (1.0 - p) / 2.0), (extra * extra, (1.0 - p) / 2.0)];
        let d = EnvDistribution::from_rho_pairs("p", &pairs).unwrap();
        prop_assume!(d.is_transient_right());
        let tol = 1e-10;
        let s = d.solve_s(tol).unwrap();
        prop_assert!(s > 0.0);
        prop_assert!((d.rho_moment(s) - 1.0).abs() <= tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn monte_carlo_ignores_worker_count(seed in any::<u64>(), reps in 1u64..12_000) {
        let w = sample_alpha_window(
            &EnvDistribution::canonical_two_point(),
            -80,
            80,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap();
        let seq = estimate_slowdown_mc(&w, 0, 60, 0.1, reps, Parallelism::Sequential, seed).unwrap();
        let par = estimate_slowdown_mc(&w, 0, 60, 0.1, reps, Parallelism::Threads(3), seed).unwrap();
        prop_assert_eq!(seq, par);
    }
}

#[test]
fn hitting_mc_ignores_worker_count() {
    let d = EnvDistribution::canonical_two_point();
    let w = sample_alpha_window(&d, 0, 40, &mut ChaCha8Rng::seed_from_u64(5))
        .unwrap()
        .with_reflection(0)
        .unwrap();
    let env = w.reflected().unwrap();
    let runs: Vec<_> = [1, 2, 5]
        .into_iter()
        .map(|k| estimate_hitting_tail_mc(&env, 0, 41, 300, 9000, Parallelism::from_workers(k), 3).unwrap())
        .collect();
    assert!(runs.windows(2).all(|p| p[0] == p[1]));
}

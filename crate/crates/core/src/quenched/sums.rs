use crate::env::Environment;
use crate::error::{Error, Result};
use crate::numeric::{check_magnitude, log_sum_exp};

pub(crate) fn reflection_site<E: Environment + ?Sized>(env: &E) -> Result<i64> {
    env.reflection()
        .ok_or_else(|| Error::InvalidWindow("operation needs a reflection site".into()))
}

fn check_pair<E: Environment + ?Sized>(env: &E, i: i64, j: i64) -> Result<()> {
    if i > j + 1 {
        return Err(Error::InvalidArgument(format!("need i <= j + 1, got i = {i}, j = {j}")));
    }
    env.check_target(i)?;
    if i <= j {
        env.check_site(j)?;
    }
    Ok(())
}

/// `W_{i,j} = Σ_{k=i}^{j} Π_{k,j}`, by `W_{i,j} = ρ_j (1 + W_{i,j-1})`.
pub fn w_left<E: Environment + ?Sized>(env: &E, i: i64, j: i64) -> Result<f64> {
    check_pair(env, i, j)?;
    let mut w = 0.0;
    for k in i..=j {
        w = check_magnitude("W", env.rho(k) * (1.0 + w))?;
    }
    Ok(w)
}

/// `R_{i,j} = Σ_{k=i}^{j} Π_{i,k}`, by `R_{i,j} = ρ_i (1 + R_{i+1,j})`.
pub fn r_right<E: Environment + ?Sized>(env: &E, i: i64, j: i64) -> Result<f64> {
    check_pair(env, i, j)?;
    let mut r = 0.0;
    for k in (i..=j).rev() {
        r = check_magnitude("R", env.rho(k) * (1.0 + r))?;
    }
    Ok(r)
}

/// `E_{ω(m)}[τ_k] = 1 + 2 W_{m+1,k}` for the reflection site `m ≤ k`.
pub fn expected_tau<E: Environment + ?Sized>(env: &E, k: i64) -> Result<f64> {
    let m = reflection_site(env)?;
    if k < m {
        return Err(Error::InvalidArgument(format!("site {k} left of reflection {m}")));
    }
    env.check_site(k)?;
    Ok(1.0 + 2.0 * w_left(env, m + 1, k)?)
}

/// Per-site expected crossing times `E_{ω(m)}[τ_k]` for `k = m..k1-1`, one pass.
pub(crate) fn tau_profile<E: Environment + ?Sized>(env: &E, k1: i64) -> Result<Vec<f64>> {
    let m = reflection_site(env)?;
    if k1 <= m {
        return Err(Error::InvalidArgument(format!(
            "target {k1} must lie right of reflection {m}"
        )));
    }
    env.check_target(k1)?;
    let mut out = Vec::with_capacity((k1 - m) as usize);
    let mut w = 0.0;
    out.push(1.0);
    for k in m + 1..k1 {
        w = check_magnitude("W", env.rho(k) * (1.0 + w))?;
        out.push(1.0 + 2.0 * w);
    }
    Ok(out)
}

fn check_hitting_args<E: Environment + ?Sized>(env: &E, k0: i64, k1: i64) -> Result<i64> {
    let m = reflection_site(env)?;
    if !(m <= k0 && k0 < k1) {
        return Err(Error::InvalidArgument(format!(
            "need reflection <= start < target, got {m}, {k0}, {k1}"
        )));
    }
    env.check_target(k1)?;
    Ok(m)
}

/// `E^{k0}_{ω(m)}[T_{k1}] = Σ_{k=k0}^{k1-1} E_{ω(m)}[τ_k]`.
pub fn expected_hitting<E: Environment + ?Sized>(env: &E, k0: i64, k1: i64) -> Result<f64> {
    let m = check_hitting_args(env, k0, k1)?;
    let taus = tau_profile(env, k1)?;
    let total: f64 = taus[(k0 - m) as usize..].iter().sum();
    check_magnitude("expected hitting time", total)
}

/// The same expectation through the explicit double sum
/// `(k1 - k0) + 2 Σ_{j=k0}^{k1-1} Σ_{i=m+1}^{j} Π_{i,j}`, with each product
/// rebuilt from scratch. Quadratic cost; meant for cross-checking.
pub fn expected_hitting_double_sum<E: Environment + ?Sized>(env: &E, k0: i64, k1: i64) -> Result<f64> {
    let m = check_hitting_args(env, k0, k1)?;
    let mut inner_total = 0.0;
    for j in k0.max(m + 1)..k1 {
        for i in m + 1..=j {
            let log_pi: f64 = (i..=j).map(|t| env.log_rho(t)).sum();
            inner_total += log_pi.exp();
        }
    }
    check_magnitude("expected hitting time", (k1 - k0) as f64 + 2.0 * inner_total)
}

/// `P^x_ω(T_b < T_a) = Σ_{j=a}^{x-1} Π_{a+1,j} / Σ_{j=a}^{b-1} Π_{a+1,j}`,
/// evaluated with the largest log-term factored out.
pub fn exit_prob<E: Environment + ?Sized>(env: &E, a: i64, x: i64, b: i64) -> Result<f64> {
    exit_split(env, a, x, b).map(|(right, _)| right)
}

/// `P^x_ω(T_a < T_b)`, computed from its own numerator so that small values
/// keep full relative precision.
pub fn exit_prob_left<E: Environment + ?Sized>(env: &E, a: i64, x: i64, b: i64) -> Result<f64> {
    exit_split(env, a, x, b).map(|(_, left)| left)
}

fn exit_split<E: Environment + ?Sized>(env: &E, a: i64, x: i64, b: i64) -> Result<(f64, f64)> {
    if !(a < x && x < b) {
        return Err(Error::InvalidArgument(format!("need a < x < b, got {a}, {x}, {b}")));
    }
    env.check_site(a)?;
    env.check_target(b)?;
    let mut log_terms = Vec::with_capacity((b - a) as usize);
    let mut acc = 0.0;
    log_terms.push(0.0);
    for j in a + 1..b {
        acc += env.log_rho(j);
        log_terms.push(acc);
    }
    let split = (x - a) as usize;
    let right = log_sum_exp(log_terms[..split].iter().copied());
    let left = log_sum_exp(log_terms[split..].iter().copied());
    let den = log_sum_exp(log_terms.iter().copied());
    if !den.is_finite() {
        return Err(Error::Overflow {
            quantity: "exit probability normalizer",
            value: den.exp(),
        });
    }
    Ok(((right - den).exp(), (left - den).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentWindow;

    fn constant(lo: i64, len: usize, omega: f64, refl: Option<i64>) -> EnvironmentWindow {
        let mut om = vec![omega; len];
        if let Some(m) = refl {
            om[(m - lo) as usize] = 1.0;
        }
        EnvironmentWindow::new(lo, om, refl).unwrap()
    }

    #[test]
    fn geometric_w_and_r() {
        let w = constant(0, 40, 2.0 / 3.0, None);
        for (i, j) in [(0, 0), (3, 10), (0, 39)] {
            let exact = 1.0 - 0.5f64.powi((j - i + 1) as i32);
            assert!((w_left(&w, i, j).unwrap() - exact).abs() < 1e-14);
            assert!((r_right(&w, i, j).unwrap() - exact).abs() < 1e-14);
        }
        assert_eq!(w_left(&w, 5, 4).unwrap(), 0.0);
        assert_eq!(r_right(&w, 5, 4).unwrap(), 0.0);
    }

    #[test]
    fn single_site_and_annihilation() {
        let w = EnvironmentWindow::new(0, vec![1.0 / 3.0, 1.0, 1.0 / 3.0], None).unwrap();
        assert!((w_left(&w, 0, 0).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(r_right(&w, 1, 2).unwrap(), 0.0);
        // W across a one-way site only keeps the terms right of it.
        assert!((w_left(&w, 0, 2).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tau_and_hitting_examples() {
        let w = constant(0, 60, 2.0 / 3.0, Some(0));
        assert_eq!(expected_tau(&w, 0).unwrap(), 1.0);
        for k in [1, 5, 30] {
            let exact = 1.0 + 2.0 * (1.0 - 0.5f64.powi(k));
            assert!((expected_tau(&w, k as i64).unwrap() - exact).abs() < 1e-13);
        }
        let one_way = constant(0, 10, 1.0, Some(0));
        assert_eq!(expected_hitting(&one_way, 2, 9).unwrap(), 7.0);
        let paper = EnvironmentWindow::new(0, vec![1.0, 2.0 / 3.0], Some(0)).unwrap();
        assert!((expected_hitting(&paper, 0, 2).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn double_sum_agrees() {
        let om = [1.0, 0.4, 0.7, 0.25, 0.9, 0.6, 0.55, 0.3, 0.8];
        let w = EnvironmentWindow::new(-2, om.to_vec(), Some(-2)).unwrap();
        for k0 in -2..5 {
            for k1 in k0 + 1..=7 {
                let a = expected_hitting(&w, k0, k1).unwrap();
                let b = expected_hitting_double_sum(&w, k0, k1).unwrap();
                assert!((a - b).abs() <= 1e-12 * a, "{k0} {k1}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn reflected_view_matches_materialized_reflection() {
        let om = [0.4, 0.7, 0.25, 0.9, 0.6];
        let w = EnvironmentWindow::new(0, om.to_vec(), None).unwrap();
        let a = expected_hitting(&w.reflect_at(1).unwrap(), 1, 5).unwrap();
        let b = expected_hitting(&w.with_reflection(1).unwrap(), 1, 5).unwrap();
        assert_eq!(a, b);
        assert!(expected_hitting(&w, 1, 5).is_err());
    }

    #[test]
    fn exit_prob_ruin_forms() {
        let sym = constant(0, 12, 0.5, None);
        assert!((exit_prob(&sym, 0, 3, 10).unwrap() - 0.3).abs() < 1e-14);
        let biased = constant(0, 12, 0.6, None);
        let r: f64 = 0.4 / 0.6;
        let exact = (1.0 - r.powi(3)) / (1.0 - r.powi(10));
        assert!((exit_prob(&biased, 0, 3, 10).unwrap() - exact).abs() < 1e-12);
        assert!(exit_prob(&sym, 3, 3, 10).is_err());
        let l = exit_prob_left(&biased, 0, 3, 10).unwrap();
        assert!((l + exit_prob(&biased, 0, 3, 10).unwrap() - 1.0).abs() < 1e-14);
        let steep = constant(0, 60, 0.95, None);
        let tiny = exit_prob_left(&steep, 0, 50, 55).unwrap();
        let r: f64 = 0.05 / 0.95;
        let exact = (r.powi(50) - r.powi(55)) / (1.0 - r.powi(55));
        assert!((tiny - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn overflow_is_reported() {
        let w = constant(0, 2000, 0.1, None);
        assert!(matches!(w_left(&w, 0, 1999), Err(Error::Overflow { .. })));
    }
}

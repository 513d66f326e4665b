use super::sums::{expected_hitting, reflection_site, tau_profile};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::numeric::{check_magnitude, sinh, OVERFLOW_LIMIT};

/// Outcome of the exact MGF recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MgfExact {
    /// The MGF is finite; stored as its logarithm.
    Finite { log_value: f64 },
    /// The geometric series behind the recursion fails at `site`: the MGF is
    /// infinite.
    Diverged { site: i64 },
}

impl MgfExact {
    pub fn is_finite(&self) -> bool {
        matches!(self, MgfExact::Finite { .. })
    }

    pub fn log_value(&self) -> Option<f64> {
        match *self {
            MgfExact::Finite { log_value } => Some(log_value),
            MgfExact::Diverged { .. } => None,
        }
    }

    /// The MGF itself. Divergence and values past the overflow limit are errors.
    pub fn value(&self) -> Result<f64> {
        match *self {
            MgfExact::Finite { log_value } => {
                if log_value > OVERFLOW_LIMIT.ln() {
                    Err(Error::Overflow {
                        quantity: "MGF",
                        value: log_value.exp(),
                    })
                } else {
                    Ok(log_value.exp())
                }
            }
            MgfExact::Diverged { site } => Err(Error::Diverged { site }),
        }
    }
}

/// Closed-form upper bound at a given tilt, or the reason it is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundValue {
    Finite { log_value: f64 },
    ConditionViolated { margin: f64 },
}

impl BoundValue {
    pub fn log_value(&self) -> Option<f64> {
        match *self {
            BoundValue::Finite { log_value } => Some(log_value),
            BoundValue::ConditionViolated { .. } => None,
        }
    }
}

/// Exact MGF, its closed-form bound and the largest admissible tilt for one
/// crossing `k0 → k1` with a reflection to the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgfResult {
    pub lambda: f64,
    pub exact: MgfExact,
    pub upper_bound: BoundValue,
    pub lambda_max: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tilt must be finite and >= 0, got {lambda}"
        )))
    }
}

fn check_crossing<E: Environment + ?Sized>(env: &E, k0: i64, k1: i64) -> Result<i64> {
    let m = reflection_site(env)?;
    if !(m <= k0 && k0 < k1) {
        return Err(Error::InvalidArgument(format!(
            "need reflection <= start < target, got {m}, {k0}, {k1}"
        )));
    }
    env.check_target(k1)?;
    Ok(m)
}

/// `E^{k0}_{ω(m)}[e^{λ T_{k1}}]` through the continued-fraction recursion
/// `g(m) = e^λ`, `g(k) = ω_k e^λ / (1 - (1-ω_k) e^λ g(k-1))`, multiplied
/// in log space over `k0 ≤ k < k1`.
pub fn mgf_exact<E: Environment + ?Sized>(env: &E, k0: i64, k1: i64, lambda: f64) -> Result<MgfExact> {
    check_lambda(lambda)?;
    let m = check_crossing(env, k0, k1)?;
    if lambda == 0.0 {
        // Every g(k) is ω_k/ω_k; return the exact value instead of its rounding.
        return Ok(MgfExact::Finite { log_value: 0.0 });
    }
    let el = lambda.exp();
    let mut g = el;
    let mut log_total = if k0 == m { lambda } else { 0.0 };
    for k in m + 1..k1 {
        let w = env.omega(k);
        let leak = (1.0 - w) * el * g;
        if leak >= 1.0 {
            return Ok(MgfExact::Diverged { site: k });
        }
        g = w * el / (1.0 - leak);
        if k >= k0 {
            log_total += g.ln();
        }
    }
    Ok(MgfExact::Finite { log_value: log_total })
}

/// `e^{-λ} - sinh(λ)·E`, the quantity whose positivity every bound needs.
pub fn tilt_margin(lambda: f64, expected: f64) -> f64 {
    (-lambda).exp() - sinh(lambda) * expected
}

/// Log of the crossing bound
/// `exp(sinh λ·E^{k0}[T_{k1}] / (e^{-λ} - sinh λ·E^{m}[T_{k1}]))`.
pub fn mgf_upper_bound_log<E: Environment + ?Sized>(env: &E, k0: i64, k1: i64, lambda: f64) -> Result<BoundValue> {
    check_lambda(lambda)?;
    let m = check_crossing(env, k0, k1)?;
    let far = expected_hitting(env, m, k1)?;
    let near = expected_hitting(env, k0, k1)?;
    Ok(bound_from_expectations(lambda, near, far))
}

/// The crossing bound from precomputed `E^{k0}[T_{k1}]` (`near`) and
/// `E^{m}[T_{k1}]` (`far`).
pub fn bound_from_expectations(lambda: f64, near: f64, far: f64) -> BoundValue {
    let margin = tilt_margin(lambda, far);
    if margin <= 0.0 {
        BoundValue::ConditionViolated { margin }
    } else {
        BoundValue::Finite {
            log_value: sinh(lambda) * near / margin,
        }
    }
}

/// The crossing bound itself; [`Error::ConditionViolated`] when the tilt is
/// too large for it to apply.
pub fn mgf_upper_bound<E: Environment + ?Sized>(env: &E, k0: i64, k1: i64, lambda: f64) -> Result<f64> {
    match mgf_upper_bound_log(env, k0, k1, lambda)? {
        BoundValue::Finite { log_value } => check_magnitude("MGF bound", log_value.exp()),
        BoundValue::ConditionViolated { margin } => Err(Error::ConditionViolated { margin }),
    }
}

/// Margins `e^{-λ} - sinh λ·(E^m[T_j] - (j - m))` for `j = m..=k1`.
pub fn excess_margins<E: Environment + ?Sized>(env: &E, k1: i64, lambda: f64) -> Result<Vec<f64>> {
    let taus = tau_profile(env, k1)?;
    let mut out = Vec::with_capacity(taus.len() + 1);
    let mut excess = 0.0;
    out.push(tilt_margin(lambda, 0.0));
    for t in taus {
        excess += t - 1.0;
        out.push(tilt_margin(lambda, excess));
    }
    Ok(out)
}

/// Per-site bound on `E_{ω(m)}[e^{λ τ_k}]` valid for `m ≤ k ≤ n` once
/// `e^{-λ} - sinh λ·(E^m[T_{n+1}] - (n+1-m)) > 0`:
/// `e^λ·D(k)/D(k+1)` with `D(j) = e^{-λ} - sinh λ·(E^m[T_j] - (j-m))`.
pub fn mgf_per_step_bound<E: Environment + ?Sized>(env: &E, k: i64, n: i64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let m = reflection_site(env)?;
    if !(m <= k && k <= n) {
        return Err(Error::InvalidArgument(format!(
            "need reflection <= k <= n, got {m}, {k}, {n}"
        )));
    }
    let margins = excess_margins(env, n + 1, lambda)?;
    let end = *margins.last().expect("nonempty");
    if end <= 0.0 {
        return Err(Error::ConditionViolated { margin: end });
    }
    let i = (k - m) as usize;
    check_magnitude("per-step bound", lambda.exp() * margins[i] / margins[i + 1])
}

/// Largest tilt with `e^{-λ}/sinh λ ≥ expected`. The equation
/// `e^{-λ}/sinh λ = E` rearranges to `e^{2λ} = 1 + 2/E`.
pub fn lambda_star(expected: f64) -> f64 {
    if expected <= 0.0 {
        return f64::INFINITY;
    }
    0.5 * (2.0 / expected).ln_1p()
}

/// [`lambda_star`] of `E^m_{ω(m)}[T_{k1}]`.
pub fn lambda_max<E: Environment + ?Sized>(env: &E, k1: i64) -> Result<f64> {
    let m = reflection_site(env)?;
    Ok(lambda_star(expected_hitting(env, m, k1)?))
}

/// Everything [`MgfResult`] carries, for one crossing and tilt.
pub fn mgf_summary<E: Environment + ?Sized>(env: &E, k0: i64, k1: i64, lambda: f64) -> Result<MgfResult> {
    Ok(MgfResult {
        lambda,
        exact: mgf_exact(env, k0, k1, lambda)?,
        upper_bound: mgf_upper_bound_log(env, k0, k1, lambda)?,
        lambda_max: lambda_max(env, k1)?,
    })
}

/// Smallest tilt at which the exact recursion over `m..k1` diverges, located
/// by bisection to relative width `rel_tol`; `None` when it stays finite up to
/// `lambda_cap`.
pub fn divergence_threshold<E: Environment + ?Sized>(
    env: &E,
    k1: i64,
    rel_tol: f64,
    lambda_cap: f64,
) -> Result<Option<f64>> {
    let m = reflection_site(env)?;
    let diverges = |l: f64| -> Result<bool> { Ok(!mgf_exact(env, m, k1, l)?.is_finite()) };
    let mut lo = lambda_max(env, k1)?;
    if diverges(lo)? {
        return Err(Error::InvalidArgument(
            "recursion diverges below the admissible tilt".into(),
        ));
    }
    let mut hi = 2.0 * lo;
    while !diverges(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > lambda_cap {
            return Ok(if diverges(lambda_cap)? {
                Some(bisect(lo, lambda_cap, rel_tol, &diverges)?)
            } else {
                None
            });
        }
    }
    Ok(Some(bisect(lo, hi, rel_tol, &diverges)?))
}

fn bisect(mut lo: f64, mut hi: f64, rel_tol: f64, diverges: &dyn Fn(f64) -> Result<bool>) -> Result<f64> {
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if diverges(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentWindow;

    fn window(om: &[f64]) -> EnvironmentWindow {
        let mut v = om.to_vec();
        v[0] = 1.0;
        EnvironmentWindow::new(0, v, Some(0)).unwrap()
    }

    #[test]
    fn zero_tilt_and_deterministic_walk() {
        let w = window(&[1.0, 0.3, 0.8, 0.6]);
        assert_eq!(mgf_exact(&w, 1, 4, 0.0).unwrap().value().unwrap(), 1.0);
        let d = window(&[1.0; 6]);
        let v = mgf_exact(&d, 1, 6, 0.2).unwrap().value().unwrap();
        assert!((v - (0.2f64 * 5.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn first_step_closed_form() {
        let w = window(&[1.0, 2.0 / 3.0]);
        let l = 0.1;
        let g1 = mgf_exact(&w, 1, 2, l).unwrap().value().unwrap();
        let e = expected_hitting(&w, 0, 2).unwrap();
        let closed = 1.0 / ((-l).exp() - l.sinh() * (e - 2.0));
        assert!((g1 - closed).abs() < 1e-14);
        assert!((g1 - 1.2428).abs() < 1e-4);
    }

    #[test]
    fn divergence_is_reported() {
        let w = window(&[1.0, 0.2, 0.2]);
        assert!(matches!(mgf_exact(&w, 0, 3, 1.0).unwrap(), MgfExact::Diverged { .. }));
        assert!(mgf_exact(&w, 0, 3, 1.0).unwrap().value().is_err());
    }

    #[test]
    fn lambda_star_closed_form() {
        assert!((lambda_star(1.0) - 3f64.ln() / 2.0).abs() < 1e-15);
        let w = window(&[1.0, 0.5]);
        assert!((lambda_max(&w, 1).unwrap() - 3f64.ln() / 2.0).abs() < 1e-15);
        for e in [1.0, 3.7, 50.0, 1e4] {
            let l = lambda_star(e);
            assert!(tilt_margin(0.999 * l, e) > 0.0);
            assert!(tilt_margin(1.001 * l, e) < 0.0);
        }
    }

    #[test]
    fn bound_at_zero_is_tight_and_violation_is_typed() {
        let w = window(&[1.0, 0.4, 0.7, 0.6]);
        assert_eq!(mgf_upper_bound(&w, 1, 4, 0.0).unwrap(), 1.0);
        let l = lambda_max(&w, 4).unwrap();
        assert!(matches!(
            mgf_upper_bound(&w, 1, 4, 1.01 * l),
            Err(Error::ConditionViolated { .. })
        ));
    }

    #[test]
    fn per_step_bound_at_reflection() {
        let w = window(&[1.0, 0.4, 0.7, 0.6]);
        let l = 0.05;
        let b = mgf_per_step_bound(&w, 0, 3, l).unwrap();
        assert!(b >= l.exp());
    }

    #[test]
    fn threshold_exceeds_lambda_star() {
        let w = window(&[1.0, 0.4, 0.7, 0.6, 0.3]);
        let lc = divergence_threshold(&w, 5, 1e-12, 50.0).unwrap().unwrap();
        assert!(lc >= lambda_max(&w, 5).unwrap());
        assert!(mgf_exact(&w, 0, 5, lc * 0.999).unwrap().is_finite());
        assert!(!mgf_exact(&w, 0, 5, lc * 1.001).unwrap().is_finite());
        let d = window(&[1.0; 4]);
        assert_eq!(divergence_threshold(&d, 4, 1e-12, 50.0).unwrap(), None);
    }
}

use crate::env::Environment;
use crate::error::{Error, Result};

/// Thomas elimination for `sub[i]·x[i-1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`.
/// Fails with the index of the first pivot that is not strictly positive.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> std::result::Result<Vec<f64>, usize> {
    let n = diag.len();
    assert!(
        sub.len() == n && sup.len() == n && rhs.len() == n,
        "band lengths differ"
    );
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let (cp, dp) = if i == 0 { (0.0, 0.0) } else { (c[i - 1], d[i - 1]) };
        let pivot = diag[i] - sub[i] * cp;
        if !(pivot > 0.0) {
            return Err(i);
        }
        c[i] = sup[i] / pivot;
        d[i] = (rhs[i] - sub[i] * dp) / pivot;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// `E^{k0}_{ω(m)}[e^{λ T_{k1}}]` as `h(k0)` where `h` solves
/// `h(x) = e^λ(ω_x h(x+1) + (1-ω_x) h(x-1))` on `m ≤ x < k1`, `h(k1) = 1`,
/// with the reflection row `h(m) = e^λ h(m+1)`.
pub fn mgf_linear_oracle<E: Environment + ?Sized>(env: &E, k0: i64, k1: i64, lambda: f64) -> Result<f64> {
    let m = env
        .reflection()
        .ok_or_else(|| Error::InvalidWindow("linear oracle needs a reflection site".into()))?;
    if !(m <= k0 && k0 < k1) {
        return Err(Error::InvalidArgument(format!(
            "need reflection <= start < target, got {m}, {k0}, {k1}"
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("bad tilt {lambda}")));
    }
    env.check_target(k1)?;
    let n = (k1 - m) as usize;
    let el = lambda.exp();
    let mut sub = vec![0.0; n];
    let diag = vec![1.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let x = m + i as i64;
        let w = if i == 0 { 1.0 } else { env.omega(x) };
        if i > 0 {
            sub[i] = -el * (1.0 - w);
        }
        if i + 1 < n {
            sup[i] = -el * w;
        } else {
            rhs[i] = el * w;
        }
    }
    match solve_tridiagonal(&sub, &diag, &sup, &rhs) {
        Ok(h) => Ok(h[(k0 - m) as usize]),
        Err(i) => Err(Error::NoBoundedSolution { site: m + i as i64 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentWindow;
    use crate::quenched::mgf_exact;

    #[test]
    fn solves_a_small_system() {
        let x = solve_tridiagonal(
            &[0.0, -1.0, -1.0],
            &[2.0, 2.0, 2.0],
            &[-1.0, -1.0, 0.0],
            &[1.0, 0.0, 1.0],
        )
        .unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert_eq!(solve_tridiagonal(&[0.0], &[0.0], &[0.0], &[1.0]), Err(0));
    }

    #[test]
    fn zero_tilt_gives_one_and_matches_recursion() {
        let w = EnvironmentWindow::new(0, vec![1.0, 0.3, 0.8, 0.6, 0.55], Some(0)).unwrap();
        assert!((mgf_linear_oracle(&w, 2, 5, 0.0).unwrap() - 1.0).abs() < 1e-14);
        for l in [0.01, 0.03, 0.05] {
            let a = mgf_linear_oracle(&w, 1, 5, l).unwrap();
            let b = mgf_exact(&w, 1, 5, l).unwrap().value().unwrap();
            assert!((a - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn large_tilt_has_no_bounded_solution() {
        let w = EnvironmentWindow::new(0, vec![1.0, 0.2, 0.2], Some(0)).unwrap();
        assert!(matches!(
            mgf_linear_oracle(&w, 0, 3, 1.0),
            Err(Error::NoBoundedSolution { .. })
        ));
    }
}

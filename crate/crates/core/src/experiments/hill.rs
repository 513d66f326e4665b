//! Tail-index estimation from the top order statistics.

use serde::Serialize;

use crate::env::{lattice_span_of, LATTICE_TOL};
use crate::error::{Error, Result};

/// Minimum number of samples at or above the cutoff.
pub const MIN_EXCEEDANCES: usize = 100;
/// Default fraction of the sample treated as the tail.
pub const DEFAULT_TOP_FRACTION: f64 = 0.01;
/// Lattice detection is skipped when the tail has more distinct values.
const LATTICE_MAX_DISTINCT: usize = 512;

/// Which estimator produced [`TailIndex::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TailMethod {
    /// Hill estimator on the `k` largest samples.
    Hill,
    /// Geometric maximum likelihood on lattice levels of `log x` with span
    /// `span`; the classic Hill estimator is biased on a lattice.
    LatticeGeometric { span: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailIndex {
    pub index: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Samples used as exceedances.
    pub exceedances: usize,
    pub method: TailMethod,
    /// The classic Hill value, reported alongside whichever method is used.
    pub hill: f64,
}

/// Estimates the tail index from the top `top_fraction` of `samples`, with a
/// 95% normal-approximation interval.
pub fn hill_tail_estimate(samples: &[f64], top_fraction: f64) -> Result<TailIndex> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "top fraction {top_fraction} not in (0, 1]"
        )));
    }
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidArgument(format!("sample {bad} is not a positive real")));
    }
    let mut logs: Vec<f64> = samples.iter().map(|x| x.ln()).collect();
    logs.sort_by(|a, b| b.total_cmp(a));
    let k = ((top_fraction * logs.len() as f64) as usize).min(logs.len().saturating_sub(1));
    if k < MIN_EXCEEDANCES {
        return Err(Error::TooFewExceedances {
            found: k,
            needed: MIN_EXCEEDANCES,
        });
    }
    let cutoff = logs[k];
    let strict = logs[..k].iter().filter(|&&g| g > cutoff).count();
    if strict < MIN_EXCEEDANCES {
        return Err(Error::TooFewExceedances {
            found: strict,
            needed: MIN_EXCEEDANCES,
        });
    }
    let excess: f64 = logs[..k].iter().map(|g| g - cutoff).sum();
    let hill = k as f64 / excess;
    if let Some(span) = tail_lattice(&logs[..=k]) {
        return lattice_estimate(&logs, cutoff, span, hill);
    }
    let half = 1.96 * hill / (k as f64).sqrt();
    Ok(TailIndex {
        index: hill,
        ci_low: hill - half,
        ci_high: hill + half,
        exceedances: k,
        method: TailMethod::Hill,
        hill,
    })
}

/// Span of the lattice carrying the (descending) tail log-values, if any.
fn tail_lattice(tail: &[f64]) -> Option<f64> {
    let base = *tail.last()?;
    let mut gaps: Vec<f64> = Vec::new();
    for &g in tail.iter().rev() {
        let d = g - base;
        if d > LATTICE_TOL * g.abs().max(1.0) && gaps.last().is_none_or(|&p| d - p > LATTICE_TOL * d) {
            gaps.push(d);
            if gaps.len() > LATTICE_MAX_DISTINCT {
                return None;
            }
        }
    }
    if gaps.len() < 2 {
        return None;
    }
    lattice_span_of(&gaps, LATTICE_TOL)
}

/// Exceedance levels `G - j0 ≥ 0` of a log-lattice with span `h` are
/// geometric with ratio `q = e^{-αh}`; the MLE is `q = m/(1+m)` with `m` the
/// mean excess level.
fn lattice_estimate(desc_logs: &[f64], cutoff: f64, span: f64, hill: f64) -> Result<TailIndex> {
    let tol = LATTICE_TOL * cutoff.abs().max(1.0);
    let levels: Vec<f64> = desc_logs
        .iter()
        .take_while(|&&g| g >= cutoff - tol)
        .map(|&g| ((g - cutoff) / span).round())
        .collect();
    let n = levels.len();
    let m = levels.iter().sum::<f64>() / n as f64;
    if m <= 0.0 {
        return Err(Error::TooFewExceedances {
            found: 0,
            needed: MIN_EXCEEDANCES,
        });
    }
    let q = m / (1.0 + m);
    let index = -q.ln() / span;
    let se = (1.0 - q) / (span * (q * n as f64).sqrt());
    Ok(TailIndex {
        index,
        ci_low: index - 1.96 * se,
        ci_high: index + 1.96 * se,
        exceedances: n,
        method: TailMethod::LatticeGeometric { span },
        hill,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pareto_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..200_000).map(|_| (1.0 - rng.random::<f64>()).powf(-0.5)).collect();
        let t = hill_tail_estimate(&xs, 0.01).unwrap();
        assert_eq!(t.method, TailMethod::Hill);
        assert!((t.index - 2.0).abs() < 0.15, "{t:?}");
        assert!(t.ci_low < t.index && t.index < t.ci_high);
    }

    #[test]
    fn geometric_lattice() {
        // P(X ≥ 2^j) = 4^{-j}: tail index 2 on the lattice log 2.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                let mut j = 0;
                while rng.random::<f64>() < 0.25 {
                    j += 1;
                }
                2f64.powi(j)
            })
            .collect();
        let t = hill_tail_estimate(&xs, 0.01).unwrap();
        match t.method {
            TailMethod::LatticeGeometric { span } => assert!((span - 2f64.ln()).abs() < 1e-9),
            m => panic!("expected lattice method, got {m:?}"),
        }
        assert!((t.index - 2.0).abs() < 0.15, "{t:?}");
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            hill_tail_estimate(&[1.0; 100_000], 0.01),
            Err(Error::TooFewExceedances { .. })
        ));
        assert!(matches!(
            hill_tail_estimate(&[2.0; 50], 0.5),
            Err(Error::TooFewExceedances { .. })
        ));
        assert!(hill_tail_estimate(&[1.0, -1.0], 0.5).is_err());
        assert!(hill_tail_estimate(&[1.0], 0.0).is_err());
    }
}

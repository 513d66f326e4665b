//! Empirical Q-means and small sampling diagnostics shared by the experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::env::{EnvDistribution, QBlockSampler};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Parallelism};
use crate::quenched::window_betas;

/// Number of batches used for batch-means standard errors.
pub const MEAN_BATCHES: usize = 50;

/// A sample mean with its batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
}

impl MeanEstimate {
    /// Mean of `xs` with the standard error taken from `batches` contiguous
    /// batch means, which absorbs short-range correlation.
    pub fn batch_means(xs: &[f64], batches: usize) -> Result<Self> {
        let batches = batches.max(2);
        if xs.len() < batches {
            return Err(Error::InvalidArgument(format!(
                "{} samples cannot form {batches} batches",
                xs.len()
            )));
        }
        let size = xs.len() / batches;
        let means: Vec<f64> = (0..batches)
            .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let grand = means.iter().sum::<f64>() / batches as f64;
        let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
        Ok(Self {
            mean,
            std_err: (var / batches as f64).sqrt(),
        })
    }

    /// Half-width `z·se` interval.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_err, self.mean + z * self.std_err)
    }
}

/// Empirical Q-means of the block statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QMeans {
    pub blocks: usize,
    pub burn_in: usize,
    /// `E_Q[ν_1]`, the mean block length.
    pub nu1: MeanEstimate,
    /// `E_Q[β_0]`, from window-β after the burn-in blocks.
    pub beta0: MeanEstimate,
    pub log_height: MeanEstimate,
}

/// Estimates `E_Q[ν_1]` and `E_Q[β_0]` from one long Q-environment. The first
/// `burn_in` blocks only serve as left context for window-β.
pub fn estimate_q_means(dist: &EnvDistribution, blocks: usize, burn_in: usize, seed: u64) -> Result<QMeans> {
    if blocks < MEAN_BATCHES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MEAN_BATCHES} blocks, got {blocks}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (window, decomp) = QBlockSampler::default().sample_q_blocks(dist, burn_in + blocks, &mut rng)?;
    let betas = window_betas(&window, &decomp)?;
    let lengths: Vec<f64> = decomp.lengths[burn_in..].iter().map(|&l| l as f64).collect();
    let logs: Vec<f64> = decomp.log_heights[burn_in..].to_vec();
    Ok(QMeans {
        blocks,
        burn_in,
        nu1: MeanEstimate::batch_means(&lengths, MEAN_BATCHES)?,
        beta0: MeanEstimate::batch_means(&betas[burn_in..], MEAN_BATCHES)?,
        log_height: MeanEstimate::batch_means(&logs, MEAN_BATCHES)?,
    })
}

/// Outcome of comparing two samples of one statistic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoSampleCheck {
    /// `|mean_a - mean_b|` in units of its standard error.
    pub mean_z: f64,
    /// Pooled quantile levels and the empirical CDF gap at each, in units of
    /// the binomial standard error.
    pub quantile_z: Vec<(f64, f64)>,
}

impl TwoSampleCheck {
    pub fn max_z(&self) -> f64 {
        self.quantile_z.iter().map(|q| q.1).fold(self.mean_z, f64::max)
    }

    pub fn passes(&self, band: f64) -> bool {
        self.max_z() <= band
    }
}

/// Compares two independent samples by their means and by the empirical CDFs
/// at the pooled `probs`-quantiles. CDF comparison keeps the check valid for
/// lattice-valued statistics where quantiles tie.
pub fn two_sample_check(a: &[f64], b: &[f64], probs: &[f64]) -> Result<TwoSampleCheck> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(
            "two-sample check needs two samples per side".into(),
        ));
    }
    let moments = |xs: &[f64]| {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v / n)
    };
    let (ma, va) = moments(a);
    let (mb, vb) = moments(b);
    let se = (va + vb).sqrt();
    let mean_z = if se > 0.0 {
        (ma - mb).abs() / se
    } else if ma == mb {
        0.0
    } else {
        f64::INFINITY
    };
    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let ecdf = |xs: &[f64], q: f64| xs.iter().filter(|&&x| x <= q).count() as f64 / xs.len() as f64;
    let mut quantile_z = Vec::with_capacity(probs.len());
    for &p in probs {
        let idx = ((p * pooled.len() as f64) as usize).min(pooled.len() - 1);
        let q = pooled[idx];
        let (fa, fb) = (ecdf(a, q), ecdf(b, q));
        let f = (fa * a.len() as f64 + fb * b.len() as f64) / pooled.len() as f64;
        let se = (f * (1.0 - f) * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
        let z = if se > 0.0 { (fa - fb).abs() / se } else { 0.0 };
        quantile_z.push((q, z));
    }
    Ok(TwoSampleCheck { mean_z, quantile_z })
}

/// Block statistics `(l_i, log M_i)` at block positions `first` and `second`
/// across `envs` independent Q-environments.
pub fn block_position_samples(
    dist: &EnvDistribution,
    envs: usize,
    first: usize,
    second: usize,
    seed: u64,
    par: Parallelism,
) -> Result<[Vec<(f64, f64)>; 2]> {
    let nblocks = first.max(second) + 1;
    let draws = map_indexed(envs, par, |e| -> Result<[(f64, f64); 2]> {
        let mut rng = crate::passage::batch_rng(seed, e as u64);
        let (_, d) = QBlockSampler::default().sample_q_blocks(dist, nblocks, &mut rng)?;
        Ok([
            (d.lengths[first] as f64, d.log_heights[first]),
            (d.lengths[second] as f64, d.log_heights[second]),
        ])
    });
    let mut out = [Vec::with_capacity(envs), Vec::with_capacity(envs)];
    for d in draws {
        let [x, y] = d?;
        out[0].push(x);
        out[1].push(y);
    }
    Ok(out)
}

/// Growth shape of `E_Q[M² 1{M ≤ x}]` as `x → ∞` for tail index `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SecondMomentRegime {
    /// `s < 2`: grows like `x^{2-s}`.
    Power { exponent: f64 },
    /// `s = 2`: grows like `log x`.
    Logarithmic,
    /// `s > 2`: converges.
    Bounded,
}

impl SecondMomentRegime {
    pub fn for_exponent(s: f64, tol: f64) -> Self {
        if (s - 2.0).abs() <= tol {
            SecondMomentRegime::Logarithmic
        } else if s < 2.0 {
            SecondMomentRegime::Power { exponent: 2.0 - s }
        } else {
            SecondMomentRegime::Bounded
        }
    }

    /// The regime's growth profile at level `x`, up to a constant.
    pub fn profile(&self, x: f64) -> f64 {
        match *self {
            SecondMomentRegime::Power { exponent } => x.powf(exponent),
            SecondMomentRegime::Logarithmic => x.ln().max(0.0),
            SecondMomentRegime::Bounded => 1.0,
        }
    }
}

/// `max_i β_i / (2n)^{1/s}` over `2n` window-β values, for `envs`
/// independent Q-environments.
pub fn normalized_max_beta(
    dist: &EnvDistribution,
    n: usize,
    s: f64,
    envs: usize,
    burn_in: usize,
    seed: u64,
    par: Parallelism,
) -> Result<Vec<f64>> {
    let scale = ((2 * n) as f64).powf(1.0 / s);
    map_indexed(envs, par, |e| -> Result<f64> {
        let mut rng = crate::passage::batch_rng(seed, e as u64);
        let (w, d) = QBlockSampler::default().sample_q_blocks(dist, burn_in + 2 * n, &mut rng)?;
        let betas = window_betas(&w, &d)?;
        Ok(betas[burn_in..].iter().copied().fold(0.0, f64::max) / scale)
    })
    .into_iter()
    .collect()
}

/// Empirical quantile by the nearest-rank rule.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_means_of_constant() {
        let m = MeanEstimate::batch_means(&[3.0; 200], 10).unwrap();
        assert_eq!(m.mean, 3.0);
        assert_eq!(m.std_err, 0.0);
        assert!(MeanEstimate::batch_means(&[1.0; 5], 10).is_err());
    }

    #[test]
    fn q_means_near_closed_forms() {
        let d = EnvDistribution::canonical_two_point();
        let q = estimate_q_means(&d, 100_000, 200, 3).unwrap();
        let (lo, hi) = q.nu1.interval(5.0);
        assert!(lo < 5.0 / 3.0 && 5.0 / 3.0 < hi, "{:?}", q.nu1);
        assert!((q.beta0.mean - 15.0).abs() < 3.0, "{:?}", q.beta0);
    }

    #[test]
    fn two_sample_identical_and_shifted() {
        let a: Vec<f64> = (0..1000).map(|i| (i % 7) as f64).collect();
        let c = two_sample_check(&a, &a, &[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(c.max_z(), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 1.0).collect();
        assert!(!two_sample_check(&a, &b, &[0.5]).unwrap().passes(4.0));
    }

    #[test]
    fn regimes() {
        assert_eq!(
            SecondMomentRegime::for_exponent(2.0, 1e-9),
            SecondMomentRegime::Logarithmic
        );
        assert_eq!(SecondMomentRegime::for_exponent(3.0, 1e-9), SecondMomentRegime::Bounded);
        let p = SecondMomentRegime::for_exponent(1.5, 1e-9);
        assert!((p.profile(4.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quantile_nearest_rank() {
        let xs = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
        assert_eq!(quantile(&xs, 0.0), 1.0);
    }
}

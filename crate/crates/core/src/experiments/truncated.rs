//! Truncated block sums: β restricted to blocks with moderate height, its
//! finite-context version, and the ζ/ψ statistics.

use serde::Serialize;

use crate::env::{Environment, EnvironmentWindow, LadderDecomposition};
use crate::error::{Error, Result};
use crate::quenched::{beta_block, window_betas};

/// Index range and thresholds for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationParams {
    pub n: f64,
    /// Index of the first summed block; needs `c - 1` blocks of left context.
    pub first_block: usize,
    /// `a_n`, the number of summed blocks.
    pub count: usize,
    pub b_n: f64,
    pub c_n: usize,
}

impl TruncationParams {
    /// `a_n = n^{η1}`, `b_n = n^{η2}`, `c_n = floor((log n)²)`, with the
    /// sum starting right after the context.
    pub fn from_exponents(n: f64, eta1: f64, eta2: f64) -> Result<Self> {
        if !(n > 1.0 && eta1 > eta2 && eta2 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need n > 1 and eta1 > eta2 > 0, got n = {n}, eta = ({eta1}, {eta2})"
            )));
        }
        let c_n = (n.ln().powi(2).floor() as usize).max(1);
        Ok(Self {
            n,
            first_block: c_n - 1,
            count: (n.powf(eta1).floor() as usize).max(1),
            b_n: n.powf(eta2),
            c_n,
        })
    }

    pub fn blocks_needed(&self) -> usize {
        self.first_block + self.count
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedSums {
    /// `Σ_i (β_i 1{M_i ≤ b_n} - β̄)`.
    pub centered_sum: f64,
    /// `Σ_i (β_i - β_i^{(c)}) 1{M_i ≤ b_n}`.
    pub truncation_diff: f64,
    /// The same sum from the closed gap identity.
    pub truncation_identity: f64,
    /// Blocks with `M_i ≤ b_n`.
    pub kept: usize,
    /// Mean of `M_i² 1{M_i ≤ b_n}` over the summed blocks.
    pub second_moment: f64,
    pub zeta_sum: f64,
    pub psi_sum: f64,
}

/// The truncated statistics over blocks `first_block .. first_block + count`.
/// β_i is the window-β (reflected at the window's left end) and `β_i^{(c)}`
/// reflects `c - 1` blocks to the left of block `i`.
pub fn truncated_sum_stats(
    window: &EnvironmentWindow,
    decomp: &LadderDecomposition,
    params: &TruncationParams,
    beta_bar: f64,
) -> Result<TruncatedSums> {
    let c = params.c_n.max(1);
    if params.first_block + 1 < c || params.blocks_needed() > decomp.num_blocks() {
        return Err(Error::InsufficientBlocks {
            needed: params.blocks_needed().max(c - 1 + params.count),
            available: decomp.num_blocks(),
        });
    }
    let betas = window_betas(window, decomp)?;
    let log_b = params.b_n.ln();
    let log_n2 = params.n.ln().powi(2);
    let mut out = TruncatedSums {
        centered_sum: 0.0,
        truncation_diff: 0.0,
        truncation_identity: 0.0,
        kept: 0,
        second_moment: 0.0,
        zeta_sum: 0.0,
        psi_sum: 0.0,
    };
    for i in params.first_block..params.blocks_needed() {
        let log_m = decomp.log_heights[i];
        let length = decomp.lengths[i] as f64;
        if log_m <= log_b {
            let q = beta_block(window, decomp, i, c)?;
            out.kept += 1;
            out.centered_sum += betas[i];
            out.truncation_diff += betas[i] - q.beta_trunc;
            out.truncation_identity += q.truncation_gap;
            out.second_moment += (2.0 * log_m).exp();
            if length <= log_n2 {
                let w_tilde = q.w_context;
                if w_tilde < log_n2 {
                    out.psi_sum += q.r_block * w_tilde;
                }
                if log_m < log_b && length < log_n2 {
                    out.zeta_sum += within_block_w_sum(window, decomp.block(i))?;
                }
            }
        }
    }
    out.centered_sum -= params.count as f64 * beta_bar;
    out.second_moment /= params.count as f64;
    Ok(out)
}

/// `Σ_{j=ν_i}^{ν_{i+1}-1} W_{ν_i,j}` in the unreflected window.
fn within_block_w_sum(window: &EnvironmentWindow, (s, e): (i64, i64)) -> Result<f64> {
    let mut w = 0.0;
    let mut sum = 0.0;
    for k in s..e {
        w = window.rho(k) * (1.0 + w);
        sum += w;
    }
    if !sum.is_finite() {
        return Err(Error::Overflow {
            quantity: "within-block W sum",
            value: sum,
        });
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvDistribution, QBlockSampler};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(blocks: usize, seed: u64) -> (EnvironmentWindow, LadderDecomposition) {
        let d = EnvDistribution::canonical_two_point();
        QBlockSampler::default()
            .sample_q_blocks(&d, blocks, &mut ChaCha8Rng::seed_from_u64(seed))
            .unwrap()
    }

    #[test]
    fn threshold_below_every_height() {
        let (w, d) = sample(400, 1);
        let p = TruncationParams {
            n: 1000.0,
            first_block: 50,
            count: 300,
            b_n: 1e-9,
            c_n: 10,
        };
        let t = truncated_sum_stats(&w, &d, &p, 15.0).unwrap();
        assert_eq!(t.kept, 0);
        assert_eq!(t.centered_sum, -300.0 * 15.0);
    }

    #[test]
    fn truncation_difference_matches_identity() {
        let (w, d) = sample(600, 2);
        let p = TruncationParams::from_exponents(500.0, 0.8, 0.3).unwrap();
        let t = truncated_sum_stats(&w, &d, &p, 15.0).unwrap();
        let scale = t.truncation_identity.abs().max(1e-300);
        assert!(
            (t.truncation_diff - t.truncation_identity).abs() <= 1e-10 * scale.max(1.0),
            "{t:?}"
        );
        assert!(t.kept > 0 && t.zeta_sum > 0.0);
    }

    #[test]
    fn too_little_context() {
        let (w, d) = sample(20, 3);
        let p = TruncationParams {
            n: 1000.0,
            first_block: 2,
            count: 10,
            b_n: 10.0,
            c_n: 5,
        };
        assert!(matches!(
            truncated_sum_stats(&w, &d, &p, 15.0),
            Err(Error::InsufficientBlocks { .. })
        ));
    }
}

use rand::Rng;

use super::distribution::{log_rho_of, EnvDistribution};
use super::ladder::{BlockTracker, LadderDecomposition};
use super::window::EnvironmentWindow;
use crate::error::{Error, Result};

/// Default cap on the length of a single ladder block.
pub const DEFAULT_BLOCK_CAP: usize = 1_000_000;

/// i.i.d. environment under α on sites `lo..=hi`.
pub fn sample_alpha_window<R: Rng + ?Sized>(
    dist: &EnvDistribution,
    lo: i64,
    hi: i64,
    rng: &mut R,
) -> Result<EnvironmentWindow> {
    if lo > hi {
        return Err(Error::InvalidArgument(format!("empty site range [{lo}, {hi}]")));
    }
    let sampler = dist.sampler();
    let omegas = (lo..=hi).map(|_| sampler.sample(rng)).collect();
    EnvironmentWindow::new(lo, omegas, None)
}

/// `(length, log height)` of one sampled block.
type Block = (usize, f64);

/// Generates environments under Q block by block: starting from a ladder
/// point, sites are drawn i.i.d. until the potential first drops strictly
/// below its value at the block start.
#[derive(Debug, Clone)]
pub struct QBlockSampler {
    pub block_cap: usize,
}

impl Default for QBlockSampler {
    fn default() -> Self {
        Self {
            block_cap: DEFAULT_BLOCK_CAP,
        }
    }
}

impl QBlockSampler {
    pub fn with_cap(block_cap: usize) -> Self {
        Self { block_cap }
    }

    fn blocks<R: Rng + ?Sized>(
        &self,
        dist: &EnvDistribution,
        nblocks: usize,
        rng: &mut R,
    ) -> Result<(Vec<f64>, Vec<Block>)> {
        if !dist.is_transient_right() {
            return Err(Error::InvalidDistribution(format!(
                "{}: Q-blocks need E[log rho] < 0",
                dist.name()
            )));
        }
        let sampler = dist.sampler();
        let mut omegas = Vec::new();
        let mut blocks = Vec::with_capacity(nblocks);
        let mut tracker = BlockTracker::new();
        while blocks.len() < nblocks {
            let w = sampler.sample(rng);
            omegas.push(w);
            if let Some(b) = tracker.push(log_rho_of(w)) {
                blocks.push(b);
            } else if tracker.len() >= self.block_cap {
                return Err(Error::BlockOverflow { cap: self.block_cap });
            }
        }
        Ok((omegas, blocks))
    }

    /// `nblocks` consecutive Q-blocks starting at `ν_0 = 0`. The window holds
    /// sites `0..ν_n`, so the last ladder point is the hitting target `hi + 1`.
    pub fn sample_q_blocks<R: Rng + ?Sized>(
        &self,
        dist: &EnvDistribution,
        nblocks: usize,
        rng: &mut R,
    ) -> Result<(EnvironmentWindow, LadderDecomposition)> {
        self.sample_q_environment(dist, 0, nblocks, rng)
    }

    /// `left_blocks + right_blocks` Q-blocks placed so that ladder point
    /// number `left_blocks` sits at the origin. Under Q the blocks on both
    /// sides of the origin are i.i.d., so this is a two-sided Q-environment.
    pub fn sample_q_environment<R: Rng + ?Sized>(
        &self,
        dist: &EnvDistribution,
        left_blocks: usize,
        right_blocks: usize,
        rng: &mut R,
    ) -> Result<(EnvironmentWindow, LadderDecomposition)> {
        let total = left_blocks + right_blocks;
        if total == 0 {
            return Err(Error::InvalidArgument("need at least one block".into()));
        }
        let (omegas, blocks) = self.blocks(dist, total, rng)?;
        let left_len: usize = blocks[..left_blocks].iter().map(|b| b.0).sum();
        let lo = -(left_len as i64);
        let window = EnvironmentWindow::new(lo, omegas, None)?;
        let decomp = LadderDecomposition::from_blocks(lo, &blocks);
        Ok((window, decomp))
    }
}

/// [`QBlockSampler::sample_q_blocks`] with the default block cap.
pub fn sample_q_blocks<R: Rng + ?Sized>(
    dist: &EnvDistribution,
    nblocks: usize,
    rng: &mut R,
) -> Result<(EnvironmentWindow, LadderDecomposition)> {
    QBlockSampler::default().sample_q_blocks(dist, nblocks, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ladder::ladder_points;
    use crate::env::window::Environment;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_atom_gives_constant_window() {
        let d = EnvDistribution::from_pairs("c", &[(0.7, 1.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = sample_alpha_window(&d, -4, 10, &mut rng).unwrap();
        assert_eq!(w.len(), 15);
        assert!(w.omegas().iter().all(|&x| x == 0.7));
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let d = EnvDistribution::canonical_three_point();
        let a = sample_alpha_window(&d, 0, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_alpha_window(&d, 0, 500, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let (qa, da) = sample_q_blocks(&d, 200, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let (qb, db) = sample_q_blocks(&d, 200, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!((qa, da), (qb, db));
    }

    #[test]
    fn one_way_law_gives_unit_blocks() {
        let d = EnvDistribution::from_pairs("ow", &[(1.0, 1.0)]).unwrap();
        let (w, dec) = sample_q_blocks(&d, 25, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(w.len(), 25);
        assert!(dec.lengths.iter().all(|&l| l == 1));
    }

    #[test]
    fn q_blocks_reconstruct_under_ladder_points() {
        let d = EnvDistribution::canonical_two_point();
        let (w, dec) = QBlockSampler::default()
            .sample_q_environment(&d, 40, 60, &mut ChaCha8Rng::seed_from_u64(11))
            .unwrap();
        assert_eq!(dec.origin_block, Some(40));
        assert_eq!(dec.nu(40), 0);
        let again = ladder_points(&w, w.lo(), w.hi() + 1).unwrap();
        assert_eq!(again, dec);
    }

    #[test]
    fn recurrent_law_is_rejected_and_cap_is_enforced() {
        let d = EnvDistribution::from_pairs("sym", &[(0.5, 1.0)]).unwrap();
        assert!(sample_q_blocks(&d, 1, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let heavy = EnvDistribution::from_rho_pairs("h", &[(4.0, 0.45), (0.2, 0.55)]).unwrap();
        let res = QBlockSampler::with_cap(2).sample_q_blocks(&heavy, 10_000, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(res.unwrap_err(), Error::BlockOverflow { cap: 2 });
    }
}

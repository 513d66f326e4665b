use super::window::{Environment, EnvironmentWindow};
use crate::error::Result;

/// A site becomes the next ladder point once the potential has dropped more
/// than this below the current one. Lattice laws produce exact returns to a
/// previous level that rounding would otherwise split into spurious ladders.
pub const LADDER_TIE_TOL: f64 = 1e-9;

/// Ladder points `ν_0 < ν_1 < …` of a window with per-block lengths and
/// exponential heights.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderDecomposition {
    pub nus: Vec<i64>,
    pub lengths: Vec<usize>,
    /// `log M_i`; `-∞` when the block's first step is a one-way site.
    pub log_heights: Vec<f64>,
    pub heights: Vec<f64>,
    /// Block `i` with `ν_i ≤ 0 < ν_{i+1}`, when the origin is covered.
    pub origin_block: Option<usize>,
}

impl LadderDecomposition {
    pub(crate) fn from_blocks(start: i64, blocks: &[(usize, f64)]) -> Self {
        let mut nus = Vec::with_capacity(blocks.len() + 1);
        nus.push(start);
        let mut lengths = Vec::with_capacity(blocks.len());
        let mut log_heights = Vec::with_capacity(blocks.len());
        let mut x = start;
        for &(len, log_h) in blocks {
            x += len as i64;
            nus.push(x);
            lengths.push(len);
            log_heights.push(log_h);
        }
        let heights = log_heights.iter().map(|h| h.exp()).collect();
        let origin_block = (0..lengths.len()).find(|&i| nus[i] <= 0 && 0 < nus[i + 1]);
        Self {
            nus,
            lengths,
            log_heights,
            heights,
            origin_block,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.lengths.len()
    }

    /// `[ν_i, ν_{i+1})`.
    pub fn block(&self, i: usize) -> (i64, i64) {
        (self.nus[i], self.nus[i + 1])
    }

    pub fn nu(&self, i: usize) -> i64 {
        self.nus[i]
    }
}

/// Incremental block scanner: feed `log ρ` site by site, receive
/// `(length, log height)` whenever a block closes. Shared by the Q-sampler
/// and [`ladder_points`] so both see the same ladder structure.
#[derive(Debug, Clone)]
pub(crate) struct BlockTracker {
    rel: f64,
    max_rel: f64,
    len: usize,
}

impl BlockTracker {
    pub(crate) fn new() -> Self {
        Self {
            rel: 0.0,
            max_rel: f64::NEG_INFINITY,
            len: 0,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, log_rho: f64) -> Option<(usize, f64)> {
        self.rel += log_rho;
        self.len += 1;
        if self.rel > self.max_rel {
            self.max_rel = self.rel;
        }
        if self.rel < -LADDER_TIE_TOL {
            let out = (self.len, self.max_rel);
            *self = Self::new();
            Some(out)
        } else {
            None
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }
}

/// Ladder points of the potential over `[start, end]`, treating `start` as
/// `ν_0`: one left-to-right pass tracking the running strict minimum of `V`
/// relative to the current ladder point. `end` may be `hi + 1`.
pub fn ladder_points(window: &EnvironmentWindow, start: i64, end: i64) -> Result<LadderDecomposition> {
    window.check_target(start)?;
    window.check_target(end)?;
    let mut tracker = BlockTracker::new();
    let mut blocks = Vec::new();
    for x in start + 1..=end {
        if let Some(b) = tracker.push(window.log_rho(x - 1)) {
            blocks.push(b);
        }
    }
    Ok(LadderDecomposition::from_blocks(start, &blocks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rhos(rhos: &[f64]) -> EnvironmentWindow {
        EnvironmentWindow::new(0, rhos.iter().map(|r| 1.0 / (1.0 + r)).collect(), None).unwrap()
    }

    #[test]
    fn hand_example() {
        let w = from_rhos(&[2.0, 0.5, 0.5]);
        let d = ladder_points(&w, 0, 3).unwrap();
        assert_eq!(d.nus, vec![0, 3]);
        assert_eq!(d.lengths, vec![3]);
        assert!((d.heights[0] - 2.0).abs() < 1e-14);
        assert_eq!(d.origin_block, Some(0));
    }

    #[test]
    fn constant_drift_every_site_is_ladder() {
        let w = EnvironmentWindow::new(0, vec![2.0 / 3.0; 12], None).unwrap();
        let d = ladder_points(&w, 0, 12).unwrap();
        assert_eq!(d.nus, (0..=12).collect::<Vec<_>>());
        assert!(d.lengths.iter().all(|&l| l == 1));
        assert!(d.heights.iter().all(|&m| (m - 0.5).abs() < 1e-15));
    }

    #[test]
    fn one_way_sites_every_site_is_ladder_with_zero_height() {
        let w = EnvironmentWindow::new(0, vec![1.0; 6], None).unwrap();
        let d = ladder_points(&w, 0, 6).unwrap();
        assert_eq!(d.num_blocks(), 6);
        assert!(d.lengths.iter().all(|&l| l == 1));
        assert!(d.heights.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn level_returns_do_not_start_blocks() {
        // V: 0, log2, 0, log2, 0, -log2
        let w = from_rhos(&[2.0, 0.5, 2.0, 0.5, 0.5]);
        let d = ladder_points(&w, 0, 5).unwrap();
        assert_eq!(d.nus, vec![0, 5]);
        assert!((d.heights[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn origin_block_in_two_sided_window() {
        let w = EnvironmentWindow::new(-3, vec![2.0 / 3.0; 8], None).unwrap();
        let d = ladder_points(&w, -3, 5).unwrap();
        assert_eq!(d.nus[0], -3);
        assert_eq!(d.origin_block, Some(3));
        assert_eq!(d.nu(3), 0);
    }
}

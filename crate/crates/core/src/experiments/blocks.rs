//! Super-blocks of `a` consecutive ladder blocks, and big/small hill labels.

use serde::Serialize;

use crate::env::LadderDecomposition;
use crate::error::{Error, Result};

/// Super-block boundaries `ν(j) = ν_{origin + j·a}` for every `j` whose
/// ladder index lies inside the decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperBlocks {
    pub a: usize,
    /// Ladder index of `ν(0)`.
    pub origin: usize,
    /// Smallest available `j`.
    pub first: i64,
    pub boundaries: Vec<i64>,
}

impl SuperBlocks {
    pub fn last(&self) -> i64 {
        self.first + self.boundaries.len() as i64 - 1
    }

    pub fn contains(&self, j: i64) -> bool {
        (self.first..=self.last()).contains(&j)
    }

    pub fn nu(&self, j: i64) -> Result<i64> {
        if !self.contains(j) {
            let needed = if j < self.first {
                (self.first - j) as usize
            } else {
                (j - self.last()) as usize
            };
            return Err(Error::InsufficientBlocks {
                needed: needed * self.a,
                available: 0,
            });
        }
        Ok(self.boundaries[(j - self.first) as usize])
    }

    /// Ladder index of the first block in super-block `j`.
    pub fn ladder_index(&self, j: i64) -> i64 {
        self.origin as i64 + j * self.a as i64
    }

    /// Errors unless every `j` in `lo..=hi` has a boundary.
    pub fn require(&self, lo: i64, hi: i64) -> Result<()> {
        if lo < self.first || hi > self.last() {
            let short = (self.first - lo).max(0) + (hi - self.last()).max(0);
            return Err(Error::InsufficientBlocks {
                needed: ((hi - lo + 1) as usize) * self.a,
                available: ((hi - lo + 1 - short).max(0) as usize) * self.a,
            });
        }
        Ok(())
    }
}

/// Every `a`-th ladder point counted from the decomposition's origin (or its
/// first ladder point when no origin is marked).
pub fn coarse_grain(decomp: &LadderDecomposition, a: usize) -> Result<SuperBlocks> {
    if a == 0 {
        return Err(Error::InvalidArgument("super-blocks need a ≥ 1".into()));
    }
    let origin = decomp.origin_block.unwrap_or(0);
    let available = decomp.num_blocks().saturating_sub(origin);
    if available < a {
        return Err(Error::InsufficientBlocks { needed: a, available });
    }
    let left = origin / a;
    let right = (decomp.num_blocks() - origin) / a;
    let boundaries = (0..=left + right)
        .map(|t| decomp.nu(origin - left * a + t * a))
        .collect();
    Ok(SuperBlocks {
        a,
        origin,
        first: -(left as i64),
        boundaries,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hill {
    Big,
    Small,
}

/// Labels block `i` big iff `M_i > n^{(1-ε)/s}`, compared as logarithms.
pub fn classify_hills(decomp: &LadderDecomposition, n: f64, s: f64, eps: f64) -> Result<Vec<Hill>> {
    if !(s > 1.0) {
        return Err(Error::InvalidArgument(format!("hill threshold needs s > 1, got {s}")));
    }
    if !(eps > 0.0 && eps < 1.0 - 1.0 / s) {
        return Err(Error::InvalidArgument(format!(
            "eps {eps} not in (0, {})",
            1.0 - 1.0 / s
        )));
    }
    if !(n > 1.0) {
        return Err(Error::InvalidArgument(format!("scale n = {n} must exceed 1")));
    }
    let log_threshold = (1.0 - eps) / s * n.ln();
    Ok(decomp
        .log_heights
        .iter()
        .map(|&h| if h > log_threshold { Hill::Big } else { Hill::Small })
        .collect())
}

/// Number of big hills in each super-block `j = sb.first..sb.last()`.
pub fn big_hills_per_superblock(sb: &SuperBlocks, labels: &[Hill]) -> Vec<usize> {
    (sb.first..sb.last())
        .map(|j| {
            let start = sb.ladder_index(j) as usize;
            labels[start..(start + sb.a).min(labels.len())]
                .iter()
                .filter(|&&h| h == Hill::Big)
                .count()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ladder_points, EnvironmentWindow};

    fn constant(len: usize, omega: f64) -> LadderDecomposition {
        let w = EnvironmentWindow::new(0, vec![omega; len], None).unwrap();
        ladder_points(&w, 0, len as i64).unwrap()
    }

    #[test]
    fn unit_blocks_coarse_grain_to_multiples() {
        let d = constant(23, 2.0 / 3.0);
        let sb = coarse_grain(&d, 5).unwrap();
        assert_eq!(sb.boundaries, vec![0, 5, 10, 15, 20]);
        assert_eq!(sb.first, 0);
        let all = coarse_grain(&d, 1).unwrap();
        assert_eq!(all.boundaries, d.nus);
        assert!(matches!(coarse_grain(&d, 24), Err(Error::InsufficientBlocks { .. })));
        assert!(sb.nu(5).is_err());
        assert!(sb.require(0, 4).is_ok() && sb.require(-1, 2).is_err());
    }

    #[test]
    fn labels_all_small_without_hills() {
        let d = constant(10, 1.0);
        let labels = classify_hills(&d, 1e4, 2.0, 0.1).unwrap();
        assert!(labels.iter().all(|&h| h == Hill::Small));
        assert!(classify_hills(&d, 1e4, 2.0, 0.6).is_err());
        assert!(classify_hills(&d, 1e4, 1.0, 0.1).is_err());
    }
}

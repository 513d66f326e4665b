use super::sums::{expected_hitting, r_right, w_left};
use crate::env::{Environment, EnvironmentWindow, LadderDecomposition};
use crate::error::{Error, Result};
use crate::numeric::{check_magnitude, rel_diff};

/// Expected crossing times of one ladder block with and without truncated
/// left context, together with the pieces of their decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct QuenchedSummary {
    pub block: usize,
    /// Blocks of left context kept by the truncation (`c ≥ 1`).
    pub context: usize,
    /// `[ν_i, ν_{i+1})`.
    pub start: i64,
    pub end: i64,
    /// Reflection used for the truncated value, `ν_{i-(c-1)}`.
    pub trunc_reflection: i64,
    /// Reflection used for the window value: the window's own reflection
    /// site, or its left edge.
    pub window_reflection: i64,
    /// Crossing time with all left context the window offers.
    pub beta_window: f64,
    /// Crossing time with a reflection `c - 1` blocks to the left.
    pub beta_trunc: f64,
    /// `Σ_{j=ν_i}^{ν_{i+1}-1} W_{ν_i,j}` in the truncated environment.
    pub w_within: f64,
    /// `R_{ν_i,ν_{i+1}-1}` in the truncated environment.
    pub r_block: f64,
    /// `W_{ν_{i-(c-1)},ν_i-1}` in the truncated environment.
    pub w_context: f64,
    /// `β_window - β_trunc` from the closed product form, original `ρ`.
    pub truncation_gap: f64,
}

impl QuenchedSummary {
    pub fn length(&self) -> usize {
        (self.end - self.start) as usize
    }

    /// The three summands `l_i`, `2 Σ W`, `2 R·W` of the truncated value.
    pub fn terms(&self) -> [f64; 3] {
        [
            self.length() as f64,
            2.0 * self.w_within,
            2.0 * self.r_block * self.w_context,
        ]
    }

    pub fn decomposition(&self) -> f64 {
        self.terms().iter().sum()
    }

    pub fn decomposition_residual(&self) -> f64 {
        rel_diff(self.beta_trunc, self.decomposition())
    }

    /// Mismatch of the closed gap form, relative to the window value.
    pub fn gap_residual(&self) -> f64 {
        ((self.beta_window - self.beta_trunc) - self.truncation_gap).abs() / self.beta_window
    }
}

fn window_base(window: &EnvironmentWindow) -> i64 {
    window.reflection().unwrap_or(window.lo())
}

/// Block `i` of `decomp` with `c` blocks of left context.
pub fn beta_block(
    window: &EnvironmentWindow,
    decomp: &LadderDecomposition,
    i: usize,
    c: usize,
) -> Result<QuenchedSummary> {
    if c == 0 {
        return Err(Error::InvalidArgument("context must be at least one block".into()));
    }
    if i + 1 < c || i >= decomp.num_blocks() {
        return Err(Error::InsufficientBlocks {
            needed: (i + 1).max(c),
            available: decomp.num_blocks(),
        });
    }
    let (start, end) = decomp.block(i);
    let refl = decomp.nu(i + 1 - c);
    let base = window_base(window);
    if refl < base {
        return Err(Error::InvalidWindow(format!(
            "truncation point {refl} lies left of the window reflection {base}"
        )));
    }

    let trunc_env = window.reflect_at(refl)?;
    let beta_trunc = expected_hitting(&trunc_env, start, end)?;
    let mut w = 0.0;
    let mut w_within = 0.0;
    for j in start..end {
        w = check_magnitude("W", trunc_env.rho(j) * (1.0 + w))?;
        w_within += w;
    }
    let r_block = r_right(&trunc_env, start, end - 1)?;
    let w_context = w_left(&trunc_env, refl, start - 1)?;

    let beta_window = expected_hitting(&window.reflect_at(base)?, start, end)?;
    let truncation_gap = if refl == base {
        0.0
    } else {
        let lead = 1.0 + w_left(window, base + 1, refl - 1)?;
        let log_pi: f64 = (refl..start).map(|x| window.log_rho(x)).sum();
        check_magnitude(
            "truncation gap",
            2.0 * lead * log_pi.exp() * r_right(window, start, end - 1)?,
        )?
    };

    Ok(QuenchedSummary {
        block: i,
        context: c,
        start,
        end,
        trunc_reflection: refl,
        window_reflection: base,
        beta_window,
        beta_trunc,
        w_within,
        r_block,
        w_context,
        truncation_gap,
    })
}

/// Window-β of every block in one left-to-right pass, reflecting at the
/// window's reflection site or left edge.
pub fn window_betas(window: &EnvironmentWindow, decomp: &LadderDecomposition) -> Result<Vec<f64>> {
    let base = window_base(window);
    if decomp.num_blocks() == 0 {
        return Ok(Vec::new());
    }
    let first = decomp.nu(0);
    if first < base {
        return Err(Error::InvalidWindow(format!(
            "decomposition starts at {first}, left of the window reflection {base}"
        )));
    }
    window.check_target(decomp.nu(decomp.num_blocks()))?;
    let mut w = 0.0;
    for k in base + 1..first {
        w = check_magnitude("W", window.rho(k) * (1.0 + w))?;
    }
    let mut out = Vec::with_capacity(decomp.num_blocks());
    for i in 0..decomp.num_blocks() {
        let (s, e) = decomp.block(i);
        let mut beta = 0.0;
        for k in s..e {
            if k > base {
                w = check_magnitude("W", window.rho(k) * (1.0 + w))?;
            }
            beta += 1.0 + 2.0 * w;
        }
        out.push(check_magnitude("window beta", beta)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ladder_points;

    fn sample() -> (EnvironmentWindow, LadderDecomposition) {
        // ρ = 2, 1/2, 1/2 repeated with a few variations: blocks of length 3 and 1.
        let rhos = [0.5, 2.0, 0.5, 0.5, 0.5, 3.0, 0.25, 0.5, 2.0, 2.0, 0.1, 0.5];
        let om: Vec<f64> = rhos.iter().map(|r| 1.0 / (1.0 + r)).collect();
        let w = EnvironmentWindow::new(0, om, None).unwrap();
        let d = ladder_points(&w, 0, 12).unwrap();
        (w, d)
    }

    #[test]
    fn constant_block_with_reflection_at_start() {
        let w = EnvironmentWindow::new(0, vec![2.0 / 3.0; 10], None).unwrap();
        let d = ladder_points(&w, 0, 10).unwrap();
        let q = beta_block(&w, &d, 4, 1).unwrap();
        assert_eq!(q.beta_trunc, 1.0);
        assert!(q.beta_window >= q.beta_trunc);
    }

    #[test]
    fn identities_and_monotonicity() {
        let (w, d) = sample();
        for i in 0..d.num_blocks() {
            let mut prev = 0.0;
            for c in 1..=i + 1 {
                let q = beta_block(&w, &d, i, c).unwrap();
                assert!(q.decomposition_residual() < 1e-12, "{q:?}");
                assert!(q.gap_residual() < 1e-12, "{q:?}");
                assert!(q.beta_trunc >= q.length() as f64);
                assert!(q.beta_trunc >= prev - 1e-12);
                assert!(q.beta_trunc <= q.beta_window + 1e-12);
                prev = q.beta_trunc;
            }
        }
    }

    #[test]
    fn full_context_equals_window() {
        let (w, d) = sample();
        let all = window_betas(&w, &d).unwrap();
        for i in 0..d.num_blocks() {
            let q = beta_block(&w, &d, i, i + 1).unwrap();
            assert_eq!(q.truncation_gap, 0.0);
            assert!(rel_diff(q.beta_trunc, q.beta_window) < 1e-14);
            assert!(rel_diff(all[i], q.beta_window) < 1e-12);
        }
    }

    #[test]
    fn missing_context_is_an_error() {
        let (w, d) = sample();
        assert!(matches!(
            beta_block(&w, &d, 0, 2),
            Err(Error::InsufficientBlocks { .. })
        ));
        assert!(beta_block(&w, &d, d.num_blocks(), 1).is_err());
    }
}

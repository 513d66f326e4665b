use std::fmt::Write as _;

use super::distribution::{log_rho_of, rho_of};
use crate::error::{Error, Result};

/// Read access to site probabilities on a finite stretch of ℤ.
///
/// Sites `lo..=hi` carry a probability; `hi + 1` is a valid hitting target
/// but has no probability of its own.
pub trait Environment {
    fn lo(&self) -> i64;
    fn hi(&self) -> i64;
    /// ω at `x`; callers guarantee `lo ≤ x ≤ hi`.
    fn omega(&self, x: i64) -> f64;
    fn rho(&self, x: i64) -> f64;
    fn log_rho(&self, x: i64) -> f64;
    fn reflection(&self) -> Option<i64>;

    fn contains(&self, x: i64) -> bool {
        self.lo() <= x && x <= self.hi()
    }

    fn check_site(&self, x: i64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::OutOfWindow {
                site: x,
                lo: self.lo(),
                hi: self.hi(),
            })
        }
    }

    /// A hitting target may sit one past the last stored site.
    fn check_target(&self, x: i64) -> Result<()> {
        if self.lo() <= x && x <= self.hi() + 1 {
            Ok(())
        } else {
            Err(Error::OutOfWindow {
                site: x,
                lo: self.lo(),
                hi: self.hi() + 1,
            })
        }
    }
}

/// A concrete finite stretch of site probabilities `ω_lo, …, ω_hi`, with an
/// optional reflection site `m` where `ω_m = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentWindow {
    lo: i64,
    omegas: Vec<f64>,
    rhos: Vec<f64>,
    log_rhos: Vec<f64>,
    reflection: Option<i64>,
    /// `V` at sites `lo..=hi+1`, anchored at `potential_anchor`.
    potential: Vec<f64>,
    potential_anchor: i64,
}

impl EnvironmentWindow {
    pub fn new(lo: i64, omegas: Vec<f64>, reflection: Option<i64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidWindow("no sites".into()));
        }
        if let Some((i, w)) = omegas.iter().enumerate().find(|(_, &w)| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::InvalidWindow(format!(
                "omega {w} at site {} outside (0, 1]",
                lo + i as i64
            )));
        }
        let hi = lo + omegas.len() as i64 - 1;
        if let Some(m) = reflection {
            if m < lo || m > hi {
                return Err(Error::InvalidWindow(format!("reflection {m} outside [{lo}, {hi}]")));
            }
            if omegas[(m - lo) as usize] != 1.0 {
                return Err(Error::InvalidWindow(format!(
                    "reflection site {m} must carry omega = 1"
                )));
            }
        }
        let rhos: Vec<f64> = omegas.iter().map(|&w| rho_of(w)).collect();
        let log_rhos: Vec<f64> = omegas.iter().map(|&w| log_rho_of(w)).collect();
        let anchor = if lo <= 0 && 0 <= hi + 1 { 0 } else { lo };
        let potential = build_potential(lo, &log_rhos, anchor);
        Ok(Self {
            lo,
            omegas,
            rhos,
            log_rhos,
            reflection,
            potential,
            potential_anchor: anchor,
        })
    }

    /// Same sites with `ω_m` replaced by 1.
    pub fn with_reflection(&self, m: i64) -> Result<Self> {
        self.check_site(m)?;
        let mut omegas = self.omegas.clone();
        omegas[(m - self.lo) as usize] = 1.0;
        Self::new(self.lo, omegas, Some(m))
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn rhos(&self) -> &[f64] {
        &self.rhos
    }

    pub fn log_rhos(&self) -> &[f64] {
        &self.log_rhos
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Site where the potential is pinned to zero: the origin when the window
    /// reaches it, otherwise `lo`.
    pub fn potential_anchor(&self) -> i64 {
        self.potential_anchor
    }

    /// `V(x)`, for `lo ≤ x ≤ hi + 1`. A one-way site (`ρ = 0`) sends `V` to
    /// `-∞` to its right and `+∞` to its left.
    pub fn potential(&self, x: i64) -> Result<f64> {
        self.check_target(x)?;
        Ok(self.potential[(x - self.lo) as usize])
    }

    /// The ω-probability view with a reflection added at `m` (`lo ≤ m ≤ hi`).
    pub fn reflect_at(&self, m: i64) -> Result<Reflected<'_>> {
        self.check_site(m)?;
        Ok(Reflected { window: self, m })
    }

    /// The view reflected at the window's own reflection site.
    pub fn reflected(&self) -> Result<Reflected<'_>> {
        let m = self
            .reflection
            .ok_or_else(|| Error::InvalidWindow("window has no reflection site".into()))?;
        self.reflect_at(m)
    }

    #[inline]
    fn idx(&self, x: i64) -> usize {
        debug_assert!(self.contains(x), "site {x} outside window");
        (x - self.lo) as usize
    }

    /// Text form: `# rwre-env v1 lo=<int> reflection=<int|none>` followed by
    /// one ω per line, printed with round-trip precision.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.omegas.len() * 20 + 48);
        let refl = self.reflection.map_or_else(|| "none".to_string(), |m| m.to_string());
        let _ = writeln!(out, "# rwre-env v1 lo={} reflection={}", self.lo, refl);
        for w in &self.omegas {
            let _ = writeln!(out, "{w:?}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        // Comment lines ahead of the format header are skipped.
        let mut lines = text
            .lines()
            .skip_while(|l| l.starts_with('#') && !l.starts_with("# rwre-env"));
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidWindow("empty window file".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("#") || fields.next() != Some("rwre-env") || fields.next() != Some("v1") {
            return Err(Error::InvalidWindow(format!("bad header line: {header}")));
        }
        let mut lo = None;
        let mut reflection = None;
        for field in fields {
            match field.split_once('=') {
                Some(("lo", v)) => {
                    lo = Some(
                        v.parse::<i64>()
                            .map_err(|e| Error::InvalidWindow(format!("bad lo {v:?}: {e}")))?,
                    )
                }
                Some(("reflection", "none")) => reflection = Some(None),
                Some(("reflection", v)) => {
                    reflection =
                        Some(Some(v.parse::<i64>().map_err(|e| {
                            Error::InvalidWindow(format!("bad reflection {v:?}: {e}"))
                        })?))
                }
                _ => return Err(Error::InvalidWindow(format!("unknown header field {field:?}"))),
            }
        }
        let lo = lo.ok_or_else(|| Error::InvalidWindow("header lacks lo=".into()))?;
        let reflection = reflection.ok_or_else(|| Error::InvalidWindow("header lacks reflection=".into()))?;
        let omegas = lines
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.parse::<f64>()
                    .map_err(|e| Error::InvalidWindow(format!("bad omega {l:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(lo, omegas, reflection)
    }
}

fn build_potential(lo: i64, log_rhos: &[f64], anchor: i64) -> Vec<f64> {
    let n = log_rhos.len() + 1;
    let mut v = vec![0.0; n];
    let a = (anchor - lo) as usize;
    for i in a + 1..n {
        v[i] = v[i - 1] + log_rhos[i - 1];
    }
    for i in (0..a).rev() {
        v[i] = v[i + 1] - log_rhos[i];
    }
    v
}

impl Environment for EnvironmentWindow {
    fn lo(&self) -> i64 {
        self.lo
    }

    fn hi(&self) -> i64 {
        self.lo + self.omegas.len() as i64 - 1
    }

    #[inline]
    fn omega(&self, x: i64) -> f64 {
        self.omegas[self.idx(x)]
    }

    #[inline]
    fn rho(&self, x: i64) -> f64 {
        self.rhos[self.idx(x)]
    }

    #[inline]
    fn log_rho(&self, x: i64) -> f64 {
        self.log_rhos[self.idx(x)]
    }

    fn reflection(&self) -> Option<i64> {
        self.reflection
    }
}

/// A window seen through the modification `ω(m)`: site `m` always steps
/// right, and sites left of `m` are unreachable, so the view starts at `m`.
#[derive(Debug, Clone, Copy)]
pub struct Reflected<'a> {
    window: &'a EnvironmentWindow,
    m: i64,
}

impl<'a> Reflected<'a> {
    pub fn site(&self) -> i64 {
        self.m
    }

    pub fn window(&self) -> &'a EnvironmentWindow {
        self.window
    }
}

impl Environment for Reflected<'_> {
    fn lo(&self) -> i64 {
        self.m
    }

    fn hi(&self) -> i64 {
        self.window.hi()
    }

    #[inline]
    fn omega(&self, x: i64) -> f64 {
        if x == self.m {
            1.0
        } else {
            self.window.omega(x)
        }
    }

    #[inline]
    fn rho(&self, x: i64) -> f64 {
        if x == self.m {
            0.0
        } else {
            self.window.rho(x)
        }
    }

    #[inline]
    fn log_rho(&self, x: i64) -> f64 {
        if x == self.m {
            f64::NEG_INFINITY
        } else {
            self.window.log_rho(x)
        }
    }

    fn reflection(&self) -> Option<i64> {
        Some(self.m)
    }
}

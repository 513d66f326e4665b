use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

/// Weights must sum to one within this absolute tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Tolerance for deciding that two log-ρ values are commensurable.
pub const LATTICE_TOL: f64 = 1e-9;
/// Largest denominator tried when matching a ratio of log-ρ values.
const LATTICE_MAX_DENOMINATOR: i64 = 1000;

/// Upper end of the bracket search in [`EnvDistribution::solve_s`].
pub const S_BRACKET_CAP: f64 = 1e6;

/// `ρ = (1 - ω) / ω`.
#[inline]
pub fn rho_of(omega: f64) -> f64 {
    (1.0 - omega) / omega
}

#[inline]
pub fn log_rho_of(omega: f64) -> f64 {
    if omega == 1.0 {
        f64::NEG_INFINITY
    } else {
        rho_of(omega).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub omega: f64,
    pub weight: f64,
}

/// File/inline form of a distribution: a name and `[omega, weight]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub name: String,
    pub atoms: Vec<[f64; 2]>,
}

/// A finite-support law for the probability ω of stepping right at one site.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvDistribution {
    name: String,
    atoms: Vec<Atom>,
}

/// Outcome of checking the distribution against the ballistic-regime
/// assumptions. Lattice support is a warning only.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub mean_log_rho: f64,
    pub transient_right: bool,
    pub tail_exponent: Option<f64>,
    pub lattice_span: Option<f64>,
}

impl Validation {
    pub fn is_lattice(&self) -> bool {
        self.lattice_span.is_some()
    }

    /// Both standing assumptions: a root `s > 1` exists and the law is non-lattice.
    pub fn satisfies_assumptions(&self) -> bool {
        self.transient_right && self.tail_exponent.is_some_and(|s| s > 1.0) && !self.is_lattice()
    }
}

impl EnvDistribution {
    pub fn new(name: impl Into<String>, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        let mut total = 0.0;
        for a in &atoms {
            if !(a.omega > 0.0 && a.omega <= 1.0) {
                return Err(Error::InvalidDistribution(format!("omega {} outside (0, 1]", a.omega)));
            }
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "weight {} is not strictly positive",
                    a.weight
                )));
            }
            total += a.weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            name: name.into(),
            atoms,
        })
    }

    pub fn from_pairs(name: impl Into<String>, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            name,
            pairs.iter().map(|&(omega, weight)| Atom { omega, weight }).collect(),
        )
    }

    /// Builds the law from `(ρ, weight)` pairs, with `ω = 1 / (1 + ρ)`.
    pub fn from_rho_pairs(name: impl Into<String>, pairs: &[(f64, f64)]) -> Result<Self> {
        let atoms = pairs
            .iter()
            .map(|&(rho, weight)| Atom {
                omega: 1.0 / (1.0 + rho),
                weight,
            })
            .collect();
        Self::new(name, atoms)
    }

    pub fn from_spec(spec: &DistributionSpec) -> Result<Self> {
        let pairs: Vec<(f64, f64)> = spec.atoms.iter().map(|a| (a[0], a[1])).collect();
        Self::from_pairs(spec.name.clone(), &pairs)
    }

    pub fn to_spec(&self) -> DistributionSpec {
        DistributionSpec {
            name: self.name.clone(),
            atoms: self.atoms.iter().map(|a| [a.omega, a.weight]).collect(),
        }
    }

    /// ω ∈ {1/3, 2/3} with weights {0.2, 0.8}: ρ ∈ {2, 1/2}, s = 2, lattice.
    pub fn canonical_two_point() -> Self {
        Self::from_pairs("canonical2pt", &[(1.0 / 3.0, 0.2), (2.0 / 3.0, 0.8)])
            .expect("canonical two-point law is valid")
    }

    /// ρ ∈ {3, 1/2, 1/4} with weights {0.15, 0.45, 0.40}; non-lattice.
    pub fn canonical_three_point() -> Self {
        Self::from_rho_pairs("canonical3pt", &[(3.0, 0.15), (0.5, 0.45), (0.25, 0.40)])
            .expect("canonical three-point law is valid")
    }

    /// Looks up one of the built-in named laws.
    pub fn named(name: &str) -> Option<Self> {
        match name {
            "canonical2pt" => Some(Self::canonical_two_point()),
            "canonical3pt" => Some(Self::canonical_three_point()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `E[log ρ]`, which is `-∞` as soon as ω = 1 carries positive weight.
    pub fn mean_log_rho(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * log_rho_of(a.omega)).sum()
    }

    pub fn mean_rho(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * rho_of(a.omega)).sum()
    }

    /// `log E[ρ^γ]` for γ > 0, in log-sum-exp form. Atoms with ω = 1 contribute 0.
    pub fn log_rho_moment(&self, gamma: f64) -> f64 {
        let terms: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| a.weight.ln() + gamma * log_rho_of(a.omega))
            .collect();
        log_sum_exp(terms.iter().copied())
    }

    pub fn rho_moment(&self, gamma: f64) -> f64 {
        self.log_rho_moment(gamma).exp()
    }

    pub fn is_transient_right(&self) -> bool {
        self.mean_log_rho() < 0.0
    }

    fn require_transient(&self) -> Result<()> {
        if self.is_transient_right() {
            Ok(())
        } else {
            Err(Error::InvalidDistribution(format!(
                "{}: E[log rho] = {} is not negative",
                self.name,
                self.mean_log_rho()
            )))
        }
    }

    /// The positive root `s` of `E[ρ^s] = 1`, by bracketing and bisection on
    /// `γ ↦ log E[ρ^γ]`. The bisection runs to machine resolution; `tol`
    /// bounds the accepted residual `|E[ρ^s] - 1|`.
    pub fn solve_s(&self, tol: f64) -> Result<f64> {
        self.require_transient()?;
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        let max_log_rho = self
            .atoms
            .iter()
            .map(|a| log_rho_of(a.omega))
            .fold(f64::NEG_INFINITY, f64::max);
        if max_log_rho <= 0.0 {
            return Err(Error::NoRoot(format!("{}: rho <= 1 on the whole support", self.name)));
        }
        let phi = |g: f64| self.log_rho_moment(g);

        let mut hi = 1.0;
        while phi(hi) <= 0.0 {
            hi *= 2.0;
            if hi > S_BRACKET_CAP {
                return Err(Error::NoRoot(format!(
                    "{}: E[rho^g] stays below 1 up to g = {S_BRACKET_CAP}",
                    self.name
                )));
            }
        }
        // φ is convex with φ < 1 on (0, s); halve until inside that interval.
        let mut lo = hi;
        for _ in 0..200 {
            lo *= 0.5;
            if phi(lo) < 0.0 {
                break;
            }
        }
        if phi(lo) >= 0.0 {
            return Err(Error::NoRoot(format!(
                "{}: could not bracket the root from below",
                self.name
            )));
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if phi(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = if phi(lo).abs() <= phi(hi).abs() { lo } else { hi };
        let residual = (self.rho_moment(s) - 1.0).abs();
        if residual > tol {
            return Err(Error::NoRoot(format!(
                "{}: residual {residual:e} exceeds tolerance {tol:e}",
                self.name
            )));
        }
        Ok(s)
    }

    /// Asymptotic speed `(1 - E[ρ]) / (1 + E[ρ])`, or 0 when `E[ρ] ≥ 1`.
    pub fn speed(&self) -> Result<f64> {
        self.require_transient()?;
        let m = self.mean_rho();
        Ok(if m < 1.0 { (1.0 - m) / (1.0 + m) } else { 0.0 })
    }

    /// Common step of the finite non-zero log-ρ values, when they are all
    /// integer multiples of one.
    pub fn lattice_span(&self) -> Option<f64> {
        let values: Vec<f64> = self
            .atoms
            .iter()
            .map(|a| log_rho_of(a.omega))
            .filter(|v| v.is_finite() && v.abs() > LATTICE_TOL)
            .collect();
        lattice_span_of(&values, LATTICE_TOL)
    }

    pub fn validate(&self) -> Validation {
        let mean_log_rho = self.mean_log_rho();
        let transient_right = mean_log_rho < 0.0;
        let tail_exponent = if transient_right { self.solve_s(1e-9).ok() } else { None };
        Validation {
            mean_log_rho,
            transient_right,
            tail_exponent,
            lattice_span: self.lattice_span(),
        }
    }

    pub fn sampler(&self) -> OmegaSampler {
        OmegaSampler {
            omegas: self.atoms.iter().map(|a| a.omega).collect(),
            index: WeightedIndex::new(self.atoms.iter().map(|a| a.weight)).expect("weights validated at construction"),
        }
    }
}

/// Draws i.i.d. site probabilities from an [`EnvDistribution`].
#[derive(Debug, Clone)]
pub struct OmegaSampler {
    omegas: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl OmegaSampler {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.omegas[self.index.sample(rng)]
    }
}

/// Best rational approximation `p/q` with `q ≤ max_den` among the continued
/// fraction convergents of `x` that lies within `tol` (relative), if any.
fn rational_match(x: f64, tol: f64, max_den: i64) -> Option<(i64, i64)> {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut rem = x;
    for _ in 0..64 {
        let a = rem.floor();
        if a.abs() > 1e12 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        if (x - h2 as f64 / k2 as f64).abs() <= tol * x.abs().max(1.0) {
            return Some((h2, k2));
        }
        let frac = rem - a as f64;
        if frac.abs() < 1e-15 {
            return None;
        }
        rem = 1.0 / frac;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
    }
    None
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Largest `h > 0` with every value an integer multiple of `h`, found by
/// matching ratios to a reference against small rationals.
pub fn lattice_span_of(values: &[f64], tol: f64) -> Option<f64> {
    let reference = values.first()?.abs();
    let mut fracs = Vec::with_capacity(values.len());
    for &v in values {
        fracs.push(rational_match(v / reference, tol, LATTICE_MAX_DENOMINATOR)?);
    }
    let lcm = fracs.iter().fold(1i64, |acc, &(_, q)| acc / gcd(acc, q) * q);
    let numerators_gcd = fracs.iter().fold(0i64, |acc, &(p, q)| gcd(acc, p * (lcm / q)));
    if numerators_gcd == 0 {
        return None;
    }
    Some(reference * numerators_gcd as f64 / lcm as f64)
}

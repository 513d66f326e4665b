//! Small numeric helpers shared by the quenched and passage modules.

use crate::error::{Error, Result};

/// Magnitude beyond which a quantity is reported as an overflow.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// Below this tilt `sinh` is evaluated by its cubic series.
const SINH_SERIES_CUTOFF: f64 = 1e-8;

pub fn sinh(x: f64) -> f64 {
    if x.abs() < SINH_SERIES_CUTOFF {
        x + x * x * x / 6.0
    } else {
        x.sinh()
    }
}

/// `e^{-λ} / sinh λ`, the largest admissible expected crossing time at tilt λ.
pub fn tilt_threshold(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return f64::INFINITY;
    }
    (-lambda).exp() / sinh(lambda)
}

/// `log Σ exp(x_i)`; `-∞` entries are ignored and an all-`-∞` input gives `-∞`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

pub(crate) fn check_magnitude(quantity: &'static str, value: f64) -> Result<f64> {
    if value.is_nan() || value.abs() > OVERFLOW_LIMIT {
        Err(Error::Overflow { quantity, value })
    } else {
        Ok(value)
    }
}

/// Relative difference `|a - b| / max(|a|, |b|, tiny)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    (a - b).abs() / scale
}

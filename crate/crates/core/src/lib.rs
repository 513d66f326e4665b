//! Random walk in a random environment on ℤ: environment laws and ladder
//! structure, exact quenched quantities, first-passage computations and the
//! numerical experiments built on them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops over parallel per-block arrays read more clearly than zips.
#![allow(clippy::needless_range_loop)]

pub mod env;
pub mod error;
pub mod experiments;
pub mod numeric;
pub mod par;
pub mod passage;
pub mod quenched;

pub use error::{Error, Result};

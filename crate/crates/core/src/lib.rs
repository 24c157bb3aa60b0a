//! Band-limited Fourier-to-space reconstruction with prolate spheroidal wave functions.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bandlimited;
pub mod error;
pub mod field;
pub mod fourier;
pub mod grid;
pub mod metrics;
pub mod phantom;
pub mod pswf;
pub mod radon;
pub mod recon;
pub mod regularize;

pub use error::{Error, Result};

//! Distance multivariance independence tests.
//!
//! The crate computes sample distance multivariance (and its total and
//! m-variants), estimates the moments of its null distribution and turns
//! them into p-values via quadratic-form tail bounds, moment-matching
//! approximations, eigenvalue methods or resampling.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod moments;
pub mod psi;
pub mod qform;
pub mod spectral;
pub mod statistics;
pub mod study;

pub use error::{Error, Result};

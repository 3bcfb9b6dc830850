//! Sparse nonnegative recovery from rank-one measurements by plain
//! nonnegative least squares, with evaluators for the recovery-guarantee
//! constants, desk-scale verifiers for the random-matrix claims behind them,
//! and an experiment harness.

// negated float comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod cli;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod numerics;
pub mod solver;

pub use error::{Error, Result};

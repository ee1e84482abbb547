//! Simulator for bargaining-based resource allocation and stable matching
//! in vehicular edge computing.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bargaining;
pub mod baselines;
pub mod channel;
pub mod cli;
pub mod config;
pub mod costmodel;
pub mod engine;
pub mod error;
pub mod matching;
pub mod metrics;
pub mod mobility;
pub mod output;
pub mod scenario;
pub mod utility;
pub mod verify;

pub use error::{Error, Result};

//! Decentralized consensus optimization over a chain of workers.
//!
//! Workers hold local convex losses and agree on a shared model by talking
//! only to their chain neighbours. Workers alternate between a head group and
//! a tail group; each group updates in parallel while the other holds still,
//! so at most half of the workers transmit in any communication round.
//!
//! - [`model`]: local losses and the penalized per-worker subproblems
//! - [`gadmm`]: the grouped ADMM engine and its convergence diagnostics
//! - [`dgadmm`]: the same engine over a chain rebuilt every `tau` iterations
//! - [`chain`]: role assignment and decentralized chain construction
//! - [`topology`]: placements and link-cost models
//! - [`netsim`]: round-based message bus used for cost accounting
//! - [`metrics`]: objective error, total communication cost, consensus violation
//! - [`baselines`]: parameter-server ADMM and batch gradient descent
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod chain;
pub mod dgadmm;
mod error;
pub mod gadmm;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod netsim;
pub mod topology;

pub use error::{Error, Result};

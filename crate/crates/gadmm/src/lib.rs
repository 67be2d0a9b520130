//! Experiment harness for `gadmm-core`: datasets, JSON configs, CSV traces,
//! and the runners behind the `gadmm` binary.

pub mod config;
pub mod data;
pub mod experiment;
pub mod trace;

pub use gadmm_core as core;

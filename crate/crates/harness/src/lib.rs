//! Batch experiments on top of `irsguard-core`: TOML configuration, seeded
//! sweeps over IRS size and eavesdropper azimuth, the cross-module validation
//! suite, and CSV/JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod seeds;
pub mod validation;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};

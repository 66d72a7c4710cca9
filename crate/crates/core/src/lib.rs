//! Simulated tempering Langevin Monte Carlo for Gaussian and log-concave
//! mixtures, with finite-state tools for checking the spectral-gap
//! decomposition bounds that justify it.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod diagnostics;
pub mod divergences;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod ladder;
pub mod math;
pub mod oracle;
pub mod rng;
pub mod suites;
pub mod sampler;

pub use error::{Error, Result};
pub use ladder::{
    build_ladder_gaussian, build_ladder_logconcave, validate_partition_estimates, RunParams,
    ScheduleConstants, TemperatureLadder,
};
pub use oracle::{DensityOracle, MixtureTarget};
pub use rng::RngStream;

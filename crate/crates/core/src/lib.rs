//! Joint inventory replenishment and product recommendation laboratory.
//!
//! - [`env`]: stochastic simulator of the coupled system.
//! - [`analytic`]: exact single-period and two-period benchmarks.
//! - [`sa`]: gradient estimators and the projected two-timescale recursion.
//! - [`nn`]: small MLPs with manual gradients and a Gaussian policy head.
//! - [`marl`]: multi-timescale multi-agent clipped policy optimization.
//! - [`harness`]: scenarios, aggregation, probes and export.

pub mod error;
pub mod analytic;
pub mod env;
pub mod nn;
pub mod sa;
pub mod marl;
pub mod harness;
pub mod config;

pub use error::{LabError, Result};

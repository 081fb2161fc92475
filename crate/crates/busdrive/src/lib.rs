//! Joint sensor assignment and mixed-fleet bus scheduling over time-expanded
//! transit networks: instance model, network builder, sensing score, MIP
//! formulations with an exact branch-and-bound core, the batch scheduling
//! heuristic with optimality bounds, and baseline comparisons.

pub mod baselines;
pub mod batch;
pub mod cli;
pub mod generator;
pub mod instance;
pub mod formulations;
pub mod mip;
pub mod network;
pub mod sensing;
pub mod report;

pub use instance::{parse_instance, serialize_instance, validate_instance, Instance};

/// Absolute comparison within the crate-wide money tolerance.
pub(crate) fn money_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= instance::MONEY_TOL
}

//! Discounted continuous-time Markov decision processes with gradual and
//! impulsive controls on finite state spaces.
//!
//! - [`model`]: the model, its validation and the uniformized kernel.
//! - [`bellman`]: the Bellman operator, two-sided value iteration, policy
//!   extraction and evaluation.
//! - [`intervention`]: chains of instantaneous impulses.
//! - [`simulator`]: Monte Carlo simulation of the controlled jump process.
//! - [`epidemic`]: the epidemic-with-carriers model and its threshold policy.

pub mod bellman;
pub mod epidemic;
pub mod error;
pub mod fixtures;
pub mod intervention;
pub mod model;
pub mod policy;
pub mod random;
pub mod simulator;

pub use bellman::{
    bellman_apply, bellman_residual, evaluate_policy, extract_policy, solve, solve_with, value_iterate, Direction,
    SolveReport, ValueFunction,
};
pub use error::{Error, Result};
pub use model::{validate_model, Ctmdp, CtmdpModel, ModelBuilder, StateId, ValidationReport};
pub use policy::{Mode, StationaryPolicy};

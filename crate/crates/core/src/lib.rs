//! Derivative-free stochastic optimization with simultaneous-perturbation
//! gradient estimates and adaptive momentum, plus a simulated single-transmon
//! pulse-control testbed.
//!
//! * [`schedules`]: power-law annealing of `a_t`, `c_t`, `β_t` and a checker
//!   for the convergence conditions.
//! * [`estimators`]: FDSA, SPSA and RSGF gradient estimates.
//! * [`optimizers`]: SGD, momentum and Adam-style updates and the run loop.
//! * [`sim`]: transmon simulation, fidelity and randomized benchmarking.
//! * [`objectives`]: the pulse-tuning losses and synthetic test functions.

pub mod error;
pub mod estimators;
pub mod objectives;
pub mod optimizers;
pub mod schedules;
pub mod sim;

pub use error::{Error, Result};
pub use estimators::{
    averaged_gradient, fdsa_gradient, rsgf_gradient, spsa_gradient, EstimatorConfig, EstimatorKind, GradientEstimate,
    ParamVector,
};
pub use objectives::Objective;
pub use optimizers::{
    run_optimization, sgd_step, Aborted, AdamState, ClipBox, IterationRecord, RunConfig, Trajectory, UpdateRule,
};
pub use schedules::{power_law_value, validate_schedules, ScheduleSet, ValidationReport};

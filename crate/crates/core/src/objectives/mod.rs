//! Objective functions: the black-box interface used by the estimators, the
//! pulse-control losses and synthetic fixtures with known gradients.

mod pulse;
pub mod synthetic;

pub use pulse::{
    combined_for_gate, loss_combined, loss_rb, loss_x, loss_y, rb_fit_for_gate, rb_loss_for_gate, x_target,
    LossComponents, LossKind, LossValue, PulseObjective, PulseObjectiveConfig, RbSettings, Y_TARGET,
};
pub use synthetic::{synthetic_objective, Cubic, Noisy, ShiftedQuadratic, Sphere, SyntheticKind};

use crate::error::Result;

/// A noisy black-box function of a real parameter vector.
///
/// `evaluate` is one measured call `f̂ = f + ε` and counts against the
/// evaluation budget. `monitor` is the value recorded in trajectories; it
/// defaults to a measured call but simulated objectives may return the
/// noise-free value instead.
pub trait Objective {
    fn dim(&self) -> usize;

    fn evaluate(&mut self, theta: &[f64]) -> Result<f64>;

    fn monitor(&mut self, theta: &[f64]) -> Result<f64> {
        self.evaluate(theta)
    }
}

impl<T: Objective + ?Sized> Objective for &mut T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        (**self).evaluate(theta)
    }
    fn monitor(&mut self, theta: &[f64]) -> Result<f64> {
        (**self).monitor(theta)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        (**self).evaluate(theta)
    }
    fn monitor(&mut self, theta: &[f64]) -> Result<f64> {
        (**self).monitor(theta)
    }
}

/// Adapts a closure into an [`Objective`]. Handy in tests.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: FnMut(&[f64]) -> f64> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: FnMut(&[f64]) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        Ok((self.f)(theta))
    }
}

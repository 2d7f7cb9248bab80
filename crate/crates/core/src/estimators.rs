//! Zeroth-order gradient estimators.
//!
//! * FDSA: per-coordinate central differences, `2p` evaluations.
//! * SPSA: two-sided difference along a Rademacher direction, 2 evaluations.
//! * RSGF: one-sided difference along a standard-normal direction, one
//!   perturbed evaluation plus a baseline `f̂(θ)` that may be shared.
//!
//! All randomness comes from the caller's stream, so identical seeds give
//! identical estimates.

use std::ops::Deref;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objectives::Objective;

/// The optimization variable. Non-empty, all entries finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("parameter vector must have at least one entry"));
        }
        if let Some((component, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { component, value });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for ParamVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(p: ParamVector) -> Self {
        p.0
    }
}

/// An estimated gradient with its evaluation accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub g_hat: Vec<f64>,
    /// Objective calls consumed, baseline calls included.
    pub n_evaluations: usize,
    /// How many of `n_evaluations` were unperturbed baseline calls `f̂(θ)`.
    pub baseline_evaluations: usize,
    pub perturbation_used: f64,
}

impl GradientEstimate {
    /// Evaluations charged against a budget. With `count_baseline = false`
    /// only the perturbed `f±` calls are charged.
    pub fn budget_cost(&self, count_baseline: bool) -> usize {
        if count_baseline {
            self.n_evaluations
        } else {
            self.n_evaluations - self.baseline_evaluations
        }
    }
}

fn check_inputs(theta: &[f64], c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("perturbation size must be positive, got {c}")));
    }
    if theta.is_empty() {
        return Err(invalid("parameter vector must have at least one entry"));
    }
    Ok(())
}

fn probe<O: Objective + ?Sized>(f: &mut O, point: &[f64], index: usize) -> Result<f64> {
    f.evaluate(point).map_err(|e| Error::Probe { probe: index, source: Box::new(e) })
}

fn shifted(theta: &[f64], dir: &[f64], scale: f64) -> Vec<f64> {
    theta.iter().zip(dir).map(|(t, d)| t + scale * d).collect()
}

/// Central finite differences along each coordinate axis.
///
/// Probe `2i` is `θ + c eᵢ`, probe `2i + 1` is `θ − c eᵢ`.
pub fn fdsa_gradient<O: Objective + ?Sized>(f: &mut O, theta: &[f64], c: f64) -> Result<GradientEstimate> {
    check_inputs(theta, c)?;
    let mut g_hat = Vec::with_capacity(theta.len());
    let mut point = theta.to_vec();
    for i in 0..theta.len() {
        point[i] = theta[i] + c;
        let plus = probe(f, &point, 2 * i)?;
        point[i] = theta[i] - c;
        let minus = probe(f, &point, 2 * i + 1)?;
        point[i] = theta[i];
        g_hat.push((plus - minus) / (2.0 * c));
    }
    Ok(GradientEstimate { g_hat, n_evaluations: 2 * theta.len(), baseline_evaluations: 0, perturbation_used: c })
}

/// I.i.d. ±1 entries with probability ½ each.
pub fn rademacher<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect()
}

/// Standard-normal direction.
pub fn gaussian_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// SPSA estimate with a freshly drawn Rademacher direction.
pub fn spsa_gradient<O: Objective + ?Sized, R: Rng + ?Sized>(
    f: &mut O,
    theta: &[f64],
    c: f64,
    rng: &mut R,
) -> Result<GradientEstimate> {
    check_inputs(theta, c)?;
    let delta = rademacher(theta.len(), rng);
    spsa_gradient_along(f, theta, c, &delta)
}

/// SPSA estimate along a given perturbation direction.
pub fn spsa_gradient_along<O: Objective + ?Sized>(
    f: &mut O,
    theta: &[f64],
    c: f64,
    delta: &[f64],
) -> Result<GradientEstimate> {
    check_inputs(theta, c)?;
    if delta.len() != theta.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: delta.len() });
    }
    if let Some(i) = delta.iter().position(|&d| d == 0.0) {
        return Err(Error::Invariant(format!("zero entry in perturbation direction at {i}")));
    }
    let plus = probe(f, &shifted(theta, delta, c), 0)?;
    let minus = probe(f, &shifted(theta, delta, -c), 1)?;
    let diff = (plus - minus) / (2.0 * c);
    Ok(GradientEstimate {
        g_hat: delta.iter().map(|d| diff / d).collect(),
        n_evaluations: 2,
        baseline_evaluations: 0,
        perturbation_used: c,
    })
}

/// RSGF estimate with a freshly drawn Gaussian direction. When `baseline` is
/// `Some`, it is used as `f̂(θ)` and no baseline call is made.
pub fn rsgf_gradient<O: Objective + ?Sized, R: Rng + ?Sized>(
    f: &mut O,
    theta: &[f64],
    c: f64,
    rng: &mut R,
    baseline: Option<f64>,
) -> Result<GradientEstimate> {
    check_inputs(theta, c)?;
    let u = gaussian_direction(theta.len(), rng);
    rsgf_gradient_along(f, theta, c, &u, baseline)
}

/// RSGF estimate along a given direction.
pub fn rsgf_gradient_along<O: Objective + ?Sized>(
    f: &mut O,
    theta: &[f64],
    c: f64,
    u: &[f64],
    baseline: Option<f64>,
) -> Result<GradientEstimate> {
    check_inputs(theta, c)?;
    if u.len() != theta.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: u.len() });
    }
    let (base, base_calls) = match baseline {
        Some(b) => (b, 0),
        None => (probe(f, theta, 1)?, 1),
    };
    let plus = probe(f, &shifted(theta, u, c), 0)?;
    let diff = (plus - base) / c;
    Ok(GradientEstimate {
        g_hat: u.iter().map(|ui| diff * ui).collect(),
        n_evaluations: 1 + base_calls,
        baseline_evaluations: base_calls,
        perturbation_used: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Fdsa,
    Spsa,
    Rsgf,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Fdsa => "fdsa",
            Self::Spsa => "spsa",
            Self::Rsgf => "rsgf",
        })
    }
}

fn default_samples() -> usize {
    1
}

/// Estimator choice, sample count and budget accounting mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub estimator: EstimatorKind,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Charge the shared RSGF baseline call against the budget.
    #[serde(default)]
    pub count_baseline: bool,
}

impl EstimatorConfig {
    pub fn new(estimator: EstimatorKind, n_samples: usize) -> Self {
        Self { estimator, n_samples, count_baseline: false }
    }

    pub fn check(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(invalid("n_samples must be >= 1"));
        }
        Ok(())
    }

    /// Budget charged for one averaged estimate in dimension `dim`.
    pub fn cost_per_update(&self, dim: usize) -> usize {
        let n = self.n_samples;
        match self.estimator {
            EstimatorKind::Fdsa => 2 * dim * n,
            EstimatorKind::Spsa => 2 * n,
            EstimatorKind::Rsgf => n + usize::from(self.count_baseline),
        }
    }

    pub fn estimate<O: Objective + ?Sized, R: Rng + ?Sized>(
        &self,
        f: &mut O,
        theta: &[f64],
        c: f64,
        rng: &mut R,
    ) -> Result<GradientEstimate> {
        averaged_gradient(self.estimator, self.n_samples, f, theta, c, rng)
    }
}

/// Componentwise mean of `n_samples` independent estimates. For RSGF the
/// baseline `f̂(θ)` is measured once and shared by every sample.
pub fn averaged_gradient<O: Objective + ?Sized, R: Rng + ?Sized>(
    kind: EstimatorKind,
    n_samples: usize,
    f: &mut O,
    theta: &[f64],
    c: f64,
    rng: &mut R,
) -> Result<GradientEstimate> {
    if n_samples == 0 {
        return Err(invalid("n_samples must be >= 1"));
    }
    check_inputs(theta, c)?;

    let mut baseline = None;
    let mut baseline_evaluations = 0;
    if kind == EstimatorKind::Rsgf {
        baseline = Some(probe(f, theta, 0)?);
        baseline_evaluations = 1;
    }

    let mut sum = vec![0.0; theta.len()];
    let mut n_evaluations = baseline_evaluations;
    for _ in 0..n_samples {
        let offset = n_evaluations;
        let est = match kind {
            EstimatorKind::Fdsa => fdsa_gradient(f, theta, c),
            EstimatorKind::Spsa => spsa_gradient(f, theta, c, rng),
            EstimatorKind::Rsgf => rsgf_gradient(f, theta, c, rng, baseline),
        }
        .map_err(|e| match e {
            Error::Probe { probe, source } => Error::Probe { probe: probe + offset, source },
            other => other,
        })?;
        n_evaluations += est.n_evaluations;
        for (s, g) in sum.iter_mut().zip(&est.g_hat) {
            *s += g;
        }
    }
    if n_samples > 1 {
        let n = n_samples as f64;
        sum.iter_mut().for_each(|s| *s /= n);
    }
    Ok(GradientEstimate { g_hat: sum, n_evaluations, baseline_evaluations, perturbation_used: c })
}

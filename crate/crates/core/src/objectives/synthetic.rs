//! Test functions with analytic gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{invalid, Error, Result};

/// `Σ θᵢ²`
#[derive(Debug, Clone)]
pub struct Sphere {
    pub dim: usize,
}

impl Sphere {
    pub fn gradient(theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|x| 2.0 * x).collect()
    }
}

impl Objective for Sphere {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        Ok(theta.iter().map(|x| x * x).sum())
    }
}

/// `Σ wᵢ (θᵢ − centerᵢ)²`
#[derive(Debug, Clone)]
pub struct ShiftedQuadratic {
    pub center: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ShiftedQuadratic {
    pub fn new(center: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if center.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), got: weights.len() });
        }
        Ok(Self { center, weights })
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.center).zip(&self.weights).map(|((x, c), w)| 2.0 * w * (x - c)).collect()
    }
}

impl Objective for ShiftedQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        Ok(theta.iter().zip(&self.center).zip(&self.weights).map(|((x, c), w)| w * (x - c).powi(2)).sum())
    }
}

/// `Σ θᵢ³`. Central differences on it carry a bias of exactly `c²` per
/// component, which makes it the fixture for bias-order checks.
#[derive(Debug, Clone)]
pub struct Cubic {
    pub dim: usize,
}

impl Cubic {
    pub fn gradient(theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|x| 3.0 * x * x).collect()
    }
}

impl Objective for Cubic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        Ok(theta.iter().map(|x| x.powi(3)).sum())
    }
}

/// Adds i.i.d. Gaussian noise to every `evaluate` call. `monitor` returns the
/// noise-free value.
pub struct Noisy<O> {
    inner: O,
    noise: Normal<f64>,
    rng: ChaCha8Rng,
}

impl<O: Objective> Noisy<O> {
    pub fn new(inner: O, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid(format!("noise sigma must be >= 0, got {sigma}")));
        }
        let noise = Normal::new(0.0, sigma).map_err(|e| invalid(e.to_string()))?;
        // Stream 0 of the same seed drives the estimator's perturbations.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        Ok(Self { inner, noise, rng })
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: Objective> Objective for Noisy<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        let clean = self.inner.evaluate(theta)?;
        Ok(clean + self.noise.sample(&mut self.rng))
    }
    fn monitor(&mut self, theta: &[f64]) -> Result<f64> {
        self.inner.monitor(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Sphere,
    Cubic,
}

/// Builds a synthetic objective of dimension `dim`, wrapped in Gaussian noise
/// when `noise_sigma > 0`.
pub fn synthetic_objective(
    kind: SyntheticKind,
    dim: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Box<dyn Objective + Send>> {
    if dim == 0 {
        return Err(invalid("dimension must be >= 1"));
    }
    Ok(match (kind, noise_sigma > 0.0) {
        (SyntheticKind::Sphere, false) => Box::new(Sphere { dim }),
        (SyntheticKind::Sphere, true) => Box::new(Noisy::new(Sphere { dim }, noise_sigma, seed)?),
        (SyntheticKind::Cubic, false) => Box::new(Cubic { dim }),
        (SyntheticKind::Cubic, true) => Box::new(Noisy::new(Cubic { dim }, noise_sigma, seed)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_at_origin() {
        let mut f = Sphere { dim: 3 };
        assert_eq!(f.evaluate(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(Sphere::gradient(&[1.0, -2.0]), vec![2.0, -4.0]);
    }

    #[test]
    fn shifted_quadratic_gradient() {
        let q = ShiftedQuadratic::new(vec![1.0, 2.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(q.gradient(&[0.0, 0.0]), vec![-2.0, -12.0]);
        assert!(ShiftedQuadratic::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn noise_standard_deviation() {
        let mut f = synthetic_objective(SyntheticKind::Sphere, 2, 0.1, 11).unwrap();
        let theta = [0.3, -0.4];
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| f.evaluate(&theta).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        assert!((0.095..=0.105).contains(&sd), "sd = {sd}");
        assert!((mean - 0.25).abs() < 0.005);
        assert_eq!(f.monitor(&theta).unwrap(), 0.25);
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(Noisy::new(Sphere { dim: 1 }, -1.0, 0).is_err());
        assert!(synthetic_objective(SyntheticKind::Cubic, 0, 0.0, 0).is_err());
    }
}

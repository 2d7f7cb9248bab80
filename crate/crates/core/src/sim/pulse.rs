//! Hann-window pulse synthesis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Number of Hann harmonics per quadrature.
pub const HANN_TERMS: usize = 10;

/// Coefficients of the Hann-window expansion
/// `I(t) = Σᵢ Aᵢ (1 − cos(2π i t / T))`, likewise `Q(t)` with `Bᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HannPulseParams {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Pulse duration in ns.
    pub duration: f64,
    /// Sample period in ns.
    pub dt: f64,
}

impl HannPulseParams {
    pub fn new(a: Vec<f64>, b: Vec<f64>, duration: f64, dt: f64) -> Result<Self> {
        let hp = Self { a, b, duration, dt };
        hp.check()?;
        Ok(hp)
    }

    /// Splits a `2·HANN_TERMS` vector into `A` (first half) and `B`.
    pub fn from_flat(theta: &[f64], duration: f64, dt: f64) -> Result<Self> {
        if theta.len() != 2 * HANN_TERMS {
            return Err(Error::DimensionMismatch { expected: 2 * HANN_TERMS, got: theta.len() });
        }
        Self::new(theta[..HANN_TERMS].to_vec(), theta[HANN_TERMS..].to_vec(), duration, dt)
    }

    pub fn zeros(duration: f64, dt: f64) -> Result<Self> {
        Self::new(vec![0.0; HANN_TERMS], vec![0.0; HANN_TERMS], duration, dt)
    }

    pub fn check(&self) -> Result<()> {
        if self.a.len() != HANN_TERMS || self.b.len() != HANN_TERMS {
            return Err(invalid(format!(
                "expected {HANN_TERMS} coefficients per channel, got {} and {}",
                self.a.len(),
                self.b.len()
            )));
        }
        if self.a.iter().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(invalid("Hann coefficients must be finite"));
        }
        if !(self.duration > 0.0) || !(self.dt > 0.0) {
            return Err(invalid("duration and dt must be positive"));
        }
        sample_count(self.duration, self.dt)?;
        Ok(())
    }

    /// Continuous-time `(I(t), Q(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let mut i_val = 0.0;
        let mut q_val = 0.0;
        for (k, (a, b)) in self.a.iter().zip(&self.b).enumerate() {
            let window = 1.0 - (2.0 * PI * (k + 1) as f64 * t / self.duration).cos();
            i_val += a * window;
            q_val += b * window;
        }
        (i_val, q_val)
    }
}

/// `T / dt` when it is a whole number.
fn sample_count(duration: f64, dt: f64) -> Result<usize> {
    let n = duration / dt;
    let rounded = n.round();
    if rounded < 1.0 || (n - rounded).abs() > 1e-9 * n.max(1.0) {
        return Err(invalid(format!("dt = {dt} ns does not divide T = {duration} ns")));
    }
    Ok(rounded as usize)
}

/// Sampled I/Q waveform, piecewise constant over `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub i_samples: Vec<f64>,
    pub q_samples: Vec<f64>,
    pub dt: f64,
    /// FIR taps applied to both channels before simulation.
    pub distortion: Option<Vec<f64>>,
}

impl PulseSequence {
    pub fn new(i_samples: Vec<f64>, q_samples: Vec<f64>, dt: f64) -> Result<Self> {
        let p = Self { i_samples, q_samples, dt, distortion: None };
        p.check()?;
        Ok(p)
    }

    /// Constant drive over `n` samples.
    pub fn constant(i: f64, q: f64, n: usize, dt: f64) -> Result<Self> {
        Self::new(vec![i; n], vec![q; n], dt)
    }

    pub fn with_distortion(mut self, taps: Option<Vec<f64>>) -> Result<Self> {
        self.distortion = taps.filter(|t| !t.is_empty());
        self.check()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.i_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i_samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.len() as f64
    }

    pub fn check(&self) -> Result<()> {
        if self.i_samples.is_empty() || self.i_samples.len() != self.q_samples.len() {
            return Err(invalid(format!(
                "I/Q sample counts must be equal and non-zero, got {} and {}",
                self.i_samples.len(),
                self.q_samples.len()
            )));
        }
        if !(self.dt > 0.0) {
            return Err(invalid("dt must be positive"));
        }
        let finite = self.i_samples.iter().chain(&self.q_samples).all(|v| v.is_finite());
        let taps_finite = self.distortion.iter().flatten().all(|v| v.is_finite());
        if !finite || !taps_finite {
            return Err(invalid("pulse samples and FIR taps must be finite"));
        }
        Ok(())
    }

    /// Samples as seen by the device, after the optional FIR filter.
    pub fn effective_samples(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.distortion {
            Some(taps) => (fir(&self.i_samples, taps), fir(&self.q_samples, taps)),
            None => (self.i_samples.clone(), self.q_samples.clone()),
        }
    }
}

/// Causal FIR filter, output truncated to the input length.
fn fir(x: &[f64], taps: &[f64]) -> Vec<f64> {
    (0..x.len()).map(|n| taps.iter().enumerate().take(n + 1).map(|(k, h)| h * x[n - k]).sum()).collect()
}

/// Samples the Hann expansion at the segment midpoints `t = dt (k + ½)`.
pub fn hann_waveform(hp: &HannPulseParams) -> Result<PulseSequence> {
    hp.check()?;
    let n = sample_count(hp.duration, hp.dt)?;
    let (i_samples, q_samples) = (0..n).map(|k| hp.eval(hp.dt * (k as f64 + 0.5))).unzip();
    PulseSequence::new(i_samples, q_samples, hp.dt)
}

//! Loss functions for tuning a Hann-window X90 gate.
//!
//! `L_x` prepares `X90_ref|0⟩`, applies the simulated gate `k` times and
//! compares the excited population with the ideal value; `L_y` does the same
//! after `Y90_ref`, which pins the rotation axis to `x`. `L_RB` is the
//! Clifford infidelity `(1 − p)·100` from a randomized-benchmarking fit.

use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{invalid, Error, Result};
use crate::sim::{
    evolve, fit_rb_decay, hann_waveform, measure_population, run_rb, x90, y90, HannPulseParams, Propagator,
    QuantumState, RbConfig, RbFitResult, Shots, TransmonParams, C64, HANN_TERMS, TUNEUP_RB_LENGTHS,
};

/// Ideal excited population after `X90_ref` and `k` perfect X90 gates:
/// `sin²((k + 1)π/4)`, so 1 for `k = 1` and ½ for `k = 2`.
pub fn x_target(k: u32) -> f64 {
    ((k as f64 + 1.0) * FRAC_PI_4).sin().powi(2)
}

/// Ideal excited population after `Y90_ref` and any number of X90 gates.
pub const Y_TARGET: f64 = 0.5;

/// Randomized-benchmarking settings for `L_RB`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbSettings {
    pub lengths: Vec<usize>,
    pub n_sequences: usize,
}

impl Default for RbSettings {
    fn default() -> Self {
        Self { lengths: TUNEUP_RB_LENGTHS.to_vec(), n_sequences: 10 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseObjectiveConfig {
    pub transmon: TransmonParams,
    /// Pulse duration, ns.
    pub duration: f64,
    /// Sample period, ns.
    pub dt: f64,
    pub distortion_fir: Option<Vec<f64>>,
    /// Repetition counts `k`; the loss averages over them.
    pub k_list: Vec<u32>,
    pub shots: Shots,
    pub rb: RbSettings,
}

impl Default for PulseObjectiveConfig {
    fn default() -> Self {
        Self {
            transmon: TransmonParams::default(),
            duration: 20.0,
            dt: 1.0,
            distortion_fir: None,
            k_list: vec![1, 2],
            shots: Shots::Finite(1000),
            rb: RbSettings::default(),
        }
    }
}

impl PulseObjectiveConfig {
    pub fn check(&self) -> Result<()> {
        self.transmon.check()?;
        if self.k_list.is_empty() {
            return Err(invalid("k_list must not be empty"));
        }
        if self.k_list[0] == 0 || self.k_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("k_list must be strictly increasing positive integers"));
        }
        if self.rb.n_sequences == 0 || self.rb.lengths.is_empty() {
            return Err(invalid("RB settings need at least one length and one sequence"));
        }
        HannPulseParams::zeros(self.duration, self.dt)?;
        Ok(())
    }

    /// Same settings with noise-free readout.
    pub fn exact(&self) -> Self {
        Self { shots: Shots::Exact, ..self.clone() }
    }

    pub fn hann(&self, theta: &[f64]) -> Result<HannPulseParams> {
        HannPulseParams::from_flat(theta, self.duration, self.dt)
    }

    /// Propagator of the Hann gate on the configured device.
    pub fn simulate_gate(&self, ab: &HannPulseParams) -> Result<Propagator> {
        let pulse = hann_waveform(ab)?.with_distortion(self.distortion_fir.clone())?;
        evolve(&pulse, &self.transmon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossComponents {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Objective calls this value accounts for.
    pub n_calls: usize,
    pub components: Option<LossComponents>,
}

fn repetition_loss<R: Rng + ?Sized>(
    gate: &Propagator,
    prep: &DMatrix<C64>,
    target: impl Fn(u32) -> f64,
    cfg: &PulseObjectiveConfig,
    rng: &mut R,
) -> Result<f64> {
    let n = gate.dim();
    let mut psi = Propagator::embed_qubit(prep, n).apply(&QuantumState::ground(n));
    let mut applied = 0;
    let mut total = 0.0;
    for &k in &cfg.k_list {
        while applied < k {
            psi = gate.apply(&psi);
            applied += 1;
        }
        let measured = measure_population(&psi, cfg.shots, rng)?.excited;
        total += (target(k) - measured).abs();
    }
    Ok(total / cfg.k_list.len() as f64)
}

fn gate_x_loss<R: Rng + ?Sized>(gate: &Propagator, cfg: &PulseObjectiveConfig, rng: &mut R) -> Result<f64> {
    repetition_loss(gate, &x90(), x_target, cfg, rng)
}

fn gate_y_loss<R: Rng + ?Sized>(gate: &Propagator, cfg: &PulseObjectiveConfig, rng: &mut R) -> Result<f64> {
    repetition_loss(gate, &y90(), |_| Y_TARGET, cfg, rng)
}

pub fn loss_x<R: Rng + ?Sized>(ab: &HannPulseParams, cfg: &PulseObjectiveConfig, rng: &mut R) -> Result<LossValue> {
    let gate = cfg.simulate_gate(ab)?;
    Ok(LossValue { value: gate_x_loss(&gate, cfg, rng)?, n_calls: 1, components: None })
}

pub fn loss_y<R: Rng + ?Sized>(ab: &HannPulseParams, cfg: &PulseObjectiveConfig, rng: &mut R) -> Result<LossValue> {
    let gate = cfg.simulate_gate(ab)?;
    Ok(LossValue { value: gate_y_loss(&gate, cfg, rng)?, n_calls: 1, components: None })
}

/// `(L_x + L_y) / 2`, both evaluated on the same simulated gate.
pub fn loss_combined<R: Rng + ?Sized>(
    ab: &HannPulseParams,
    cfg: &PulseObjectiveConfig,
    rng: &mut R,
) -> Result<LossValue> {
    let gate = cfg.simulate_gate(ab)?;
    combined_for_gate(&gate, cfg, rng)
}

/// `L = (L_x + L_y)/2` for an already simulated gate.
pub fn combined_for_gate<R: Rng + ?Sized>(
    gate: &Propagator,
    cfg: &PulseObjectiveConfig,
    rng: &mut R,
) -> Result<LossValue> {
    let x = gate_x_loss(gate, cfg, rng)?;
    let y = gate_y_loss(gate, cfg, rng)?;
    Ok(LossValue { value: 0.5 * (x + y), n_calls: 1, components: Some(LossComponents { x, y }) })
}

/// Clifford RB on a given gate followed by the decay fit.
pub fn rb_fit_for_gate<R: Rng + ?Sized>(
    gate: &Propagator,
    cfg: &PulseObjectiveConfig,
    interleaved: bool,
    rng: &mut R,
) -> Result<RbFitResult> {
    let rb =
        RbConfig { lengths: cfg.rb.lengths.clone(), n_sequences: cfg.rb.n_sequences, shots: cfg.shots, interleaved };
    fit_rb_decay(&run_rb(gate, &rb, rng)?)
}

/// `L_RB = (1 − p)·100`, floored at zero when the fitted decay exceeds 1.
pub fn rb_loss_for_gate<R: Rng + ?Sized>(
    gate: &Propagator,
    cfg: &PulseObjectiveConfig,
    rng: &mut R,
) -> Result<LossValue> {
    let fit = rb_fit_for_gate(gate, cfg, false, rng)?;
    Ok(LossValue { value: ((1.0 - fit.decay_rate) * 100.0).max(0.0), n_calls: 1, components: None })
}

pub fn loss_rb<R: Rng + ?Sized>(ab: &HannPulseParams, cfg: &PulseObjectiveConfig, rng: &mut R) -> Result<LossValue> {
    let gate = cfg.simulate_gate(ab)?;
    rb_loss_for_gate(&gate, cfg, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Lx,
    Ly,
    #[serde(rename = "l_combined")]
    Combined,
    #[serde(rename = "l_rb")]
    Rb,
}

/// A pulse loss exposed as an [`Objective`] over a subset of the 20 Hann
/// coefficients (`A₁..A₁₀` then `B₁..B₁₀`). Inactive coefficients stay at
/// their base values.
///
/// Every `evaluate` draws fresh shot noise. `monitor` uses exact readout.
pub struct PulseObjective {
    cfg: PulseObjectiveConfig,
    exact: PulseObjectiveConfig,
    kind: LossKind,
    base: Vec<f64>,
    active: Vec<usize>,
    rng: ChaCha8Rng,
    monitor_rng: ChaCha8Rng,
}

impl PulseObjective {
    /// `active_dims = None` optimizes all 20 coefficients.
    pub fn new(cfg: PulseObjectiveConfig, kind: LossKind, active_dims: Option<Vec<usize>>, seed: u64) -> Result<Self> {
        cfg.check()?;
        let full = 2 * HANN_TERMS;
        let active = active_dims.unwrap_or_else(|| (0..full).collect());
        if active.is_empty() {
            return Err(invalid("active_dims must not be empty"));
        }
        if active.iter().any(|&d| d >= full) {
            return Err(invalid(format!("active_dims entries must be < {full}")));
        }
        let mut sorted = active.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != active.len() {
            return Err(invalid("active_dims must not repeat"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let mut monitor_rng = ChaCha8Rng::seed_from_u64(seed);
        monitor_rng.set_stream(2);
        let exact = cfg.exact();
        Ok(Self { cfg, exact, kind, base: vec![0.0; full], active, rng, monitor_rng })
    }

    /// Values for the inactive coefficients.
    pub fn with_base(mut self, base: Vec<f64>) -> Result<Self> {
        if base.len() != 2 * HANN_TERMS {
            return Err(Error::DimensionMismatch { expected: 2 * HANN_TERMS, got: base.len() });
        }
        self.base = base;
        Ok(self)
    }

    pub fn config(&self) -> &PulseObjectiveConfig {
        &self.cfg
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn active_dims(&self) -> &[usize] {
        &self.active
    }

    /// Full 20-coefficient vector for an active-dimension point.
    pub fn expand(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.active.len() {
            return Err(Error::DimensionMismatch { expected: self.active.len(), got: theta.len() });
        }
        let mut full = self.base.clone();
        for (&d, &v) in self.active.iter().zip(theta) {
            full[d] = v;
        }
        Ok(full)
    }

    pub fn gate(&self, theta: &[f64]) -> Result<Propagator> {
        let hp = self.cfg.hann(&self.expand(theta)?)?;
        self.cfg.simulate_gate(&hp)
    }

    fn loss(&self, cfg: &PulseObjectiveConfig, theta: &[f64], rng: &mut ChaCha8Rng) -> Result<LossValue> {
        let gate = self.gate(theta)?;
        match self.kind {
            LossKind::Lx => Ok(LossValue { value: gate_x_loss(&gate, cfg, rng)?, n_calls: 1, components: None }),
            LossKind::Ly => Ok(LossValue { value: gate_y_loss(&gate, cfg, rng)?, n_calls: 1, components: None }),
            LossKind::Combined => combined_for_gate(&gate, cfg, rng),
            LossKind::Rb => rb_loss_for_gate(&gate, cfg, rng),
        }
    }
}

impl Objective for PulseObjective {
    fn dim(&self) -> usize {
        self.active.len()
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        let mut rng = self.rng.clone();
        let out = self.loss(&self.cfg, theta, &mut rng);
        self.rng = rng;
        Ok(out?.value)
    }

    fn monitor(&mut self, theta: &[f64]) -> Result<f64> {
        let mut rng = self.monitor_rng.clone();
        let out = self.loss(&self.exact, theta, &mut rng);
        self.monitor_rng = rng;
        Ok(out?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_cfg(n_levels: usize) -> PulseObjectiveConfig {
        PulseObjectiveConfig {
            transmon: TransmonParams { n_levels, ..TransmonParams::default() },
            shots: Shots::Exact,
            ..PulseObjectiveConfig::default()
        }
    }

    /// Amplitude of `A₁` giving a π/2 rotation in the two-level limit.
    fn x90_amplitude(cfg: &PulseObjectiveConfig) -> f64 {
        std::f64::consts::FRAC_PI_2 / (cfg.transmon.drive_scale * cfg.duration)
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn targets() {
        assert!((x_target(1) - 1.0).abs() < 1e-15);
        assert!((x_target(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_x90_has_zero_loss() {
        let cfg = exact_cfg(2);
        let mut theta = vec![0.0; 20];
        theta[0] = x90_amplitude(&cfg);
        let hp = cfg.hann(&theta).unwrap();
        assert!(loss_x(&hp, &cfg, &mut rng()).unwrap().value < 1e-12);
        assert!(loss_y(&hp, &cfg, &mut rng()).unwrap().value < 1e-12);
        assert!(loss_combined(&hp, &cfg, &mut rng()).unwrap().value < 1e-12);
    }

    #[test]
    fn identity_gate_losses() {
        let cfg = exact_cfg(3);
        let hp = HannPulseParams::zeros(20.0, 1.0).unwrap();
        assert!((loss_x(&hp, &cfg, &mut rng()).unwrap().value - 0.25).abs() < 1e-12);
        assert!(loss_y(&hp, &cfg, &mut rng()).unwrap().value.abs() < 1e-12);
        let l = loss_combined(&hp, &cfg, &mut rng()).unwrap();
        assert!((l.value - 0.125).abs() < 1e-12);
        let c = l.components.unwrap();
        assert_eq!(l.value, 0.5 * (c.x + c.y));
    }

    #[test]
    fn y_loss_detects_axis_error() {
        // A Q-channel pulse is a Y90: the +x preparation is rotated to |1>.
        let cfg = exact_cfg(2);
        let mut theta = vec![0.0; 20];
        theta[10] = x90_amplitude(&cfg);
        let gate = cfg.simulate_gate(&cfg.hann(&theta).unwrap()).unwrap();
        let single = PulseObjectiveConfig { k_list: vec![1], ..cfg.clone() };
        let ly = gate_y_loss(&gate, &single, &mut rng()).unwrap();
        assert!((ly - 0.5).abs() < 1e-12, "{ly}");
    }

    #[test]
    fn ideal_gate_rb_loss() {
        let cfg = PulseObjectiveConfig {
            rb: RbSettings { lengths: TUNEUP_RB_LENGTHS.to_vec(), n_sequences: 3 },
            ..exact_cfg(3)
        };
        let gate = Propagator::embed_qubit(&x90(), 3);
        let l = rb_loss_for_gate(&gate, &cfg, &mut rng()).unwrap();
        assert!(l.value.abs() < 1e-4);
    }

    #[test]
    fn masked_objective_embeds_coefficients() {
        let cfg = exact_cfg(3);
        let mut obj = PulseObjective::new(cfg, LossKind::Lx, Some(vec![0, 10]), 3).unwrap();
        assert_eq!(obj.dim(), 2);
        let full = obj.expand(&[0.375, 0.225]).unwrap();
        assert_eq!(full[0], 0.375);
        assert_eq!(full[10], 0.225);
        assert_eq!(full.iter().filter(|v| **v != 0.0).count(), 2);
        let a = obj.evaluate(&[0.0, 0.0]).unwrap();
        assert!((a - 0.25).abs() < 1e-12);
        assert!(PulseObjective::new(exact_cfg(3), LossKind::Lx, Some(vec![20]), 0).is_err());
        assert!(PulseObjective::new(exact_cfg(3), LossKind::Lx, Some(vec![1, 1]), 0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = PulseObjectiveConfig::default();
        assert!(cfg.check().is_ok());
        cfg.k_list = vec![2, 1];
        assert!(cfg.check().is_err());
        cfg.k_list = vec![0, 1];
        assert!(cfg.check().is_err());
        cfg.k_list = vec![1, 2];
        cfg.dt = 3.0;
        assert!(cfg.check().is_err());
    }
}

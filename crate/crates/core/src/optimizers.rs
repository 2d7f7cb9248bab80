//! Update rules and the outer estimate→update loop.
//!
//! The Adam variant keeps exponential moving averages `m`, `v` of the
//! estimated gradient and its square with time-varying decay `β_t`, `γ_t`.
//! Their bias correction divides by the total EMA weight handed to gradient
//! samples so far (the weight mass), which for constant decay reduces to the
//! familiar `1 − βᵗ`. The weight mass is maintained recursively:
//!
//! ```text
//! w_t = β_t · w_{t−1} + (1 − β_t),   w_0 = 0
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{EstimatorConfig, GradientEstimate, ParamVector};
use crate::objectives::Objective;
use crate::schedules::ScheduleSet;

fn check_gradient(theta: &[f64], g_hat: &[f64]) -> Result<()> {
    if theta.len() != g_hat.len() {
        return Err(Error::DimensionMismatch { expected: theta.len(), got: g_hat.len() });
    }
    if let Some((component, &value)) = g_hat.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(Error::NonFinite { component, value });
    }
    Ok(())
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn check_decay(name: &str, v: f64) -> Result<()> {
    if !(0.0..1.0).contains(&v) {
        return Err(invalid(format!("{name} must lie in [0, 1), got {v}")));
    }
    Ok(())
}

fn finish(values: Vec<f64>) -> Result<ParamVector> {
    ParamVector::new(values).map_err(|e| match e {
        Error::NonFinite { component, value } => {
            Error::Numeric(format!("update produced non-finite component {component}: {value}"))
        }
        other => other,
    })
}

/// `θ' = θ − a_t ĝ`.
pub fn sgd_step(theta: &ParamVector, g_hat: &GradientEstimate, a_t: f64) -> Result<ParamVector> {
    check_gradient(theta, &g_hat.g_hat)?;
    check_rate("learning rate", a_t)?;
    finish(theta.iter().zip(&g_hat.g_hat).map(|(t, g)| t - a_t * g).collect())
}

/// First/second moment estimates and their renormalization weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub weight_mass_m: f64,
    pub weight_mass_v: f64,
}

impl AdamState {
    pub fn new(dim: usize) -> Self {
        Self { m: vec![0.0; dim], v: vec![0.0; dim], t: 0, weight_mass_m: 0.0, weight_mass_v: 0.0 }
    }

    /// Bias-corrected first moment. Zero before the first step.
    pub fn m_hat(&self) -> Vec<f64> {
        if self.t == 0 {
            return vec![0.0; self.m.len()];
        }
        self.m.iter().map(|m| m / self.weight_mass_m).collect()
    }

    /// Bias-corrected second moment. Zero before the first step.
    pub fn v_hat(&self) -> Vec<f64> {
        if self.t == 0 {
            return vec![0.0; self.v.len()];
        }
        self.v.iter().map(|v| v / self.weight_mass_v).collect()
    }

    fn push_first_moment(&mut self, g: &[f64], beta_t: f64) {
        for (m, g) in self.m.iter_mut().zip(g) {
            *m = beta_t * *m + (1.0 - beta_t) * g;
        }
        self.weight_mass_m = beta_t * self.weight_mass_m + (1.0 - beta_t);
    }

    fn push_second_moment(&mut self, g: &[f64], gamma_t: f64) {
        for (v, g) in self.v.iter_mut().zip(g) {
            *v = gamma_t * *v + (1.0 - gamma_t) * g * g;
        }
        self.weight_mass_v = gamma_t * self.weight_mass_v + (1.0 - gamma_t);
    }

    fn check_shape(&self, theta: &[f64]) -> Result<()> {
        if self.m.len() != theta.len() || self.v.len() != theta.len() {
            return Err(Error::DimensionMismatch { expected: self.m.len(), got: theta.len() });
        }
        Ok(())
    }

    /// One adaptive-momentum update:
    /// `θ'ᵢ = θᵢ − a_t · m̂ᵢ / (√v̂ᵢ + δ)`.
    pub fn adam_step(
        &mut self,
        theta: &ParamVector,
        g_hat: &GradientEstimate,
        a_t: f64,
        beta_t: f64,
        gamma_t: f64,
        delta: f64,
    ) -> Result<ParamVector> {
        self.check_shape(theta)?;
        check_gradient(theta, &g_hat.g_hat)?;
        check_rate("learning rate", a_t)?;
        check_decay("beta_t", beta_t)?;
        check_decay("gamma_t", gamma_t)?;
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(invalid(format!("delta must be positive, got {delta}")));
        }

        self.push_first_moment(&g_hat.g_hat, beta_t);
        self.push_second_moment(&g_hat.g_hat, gamma_t);
        self.t += 1;

        let mut out = Vec::with_capacity(theta.len());
        for i in 0..theta.len() {
            let m_hat = self.m[i] / self.weight_mass_m;
            let v_hat = self.v[i] / self.weight_mass_v;
            if v_hat < 0.0 {
                return Err(Error::Invariant(format!("negative second moment at {i}: {v_hat}")));
            }
            out.push(theta[i] - a_t * m_hat / (v_hat.sqrt() + delta));
        }
        finish(out)
    }

    /// Heavy-ball update without the adaptive denominator:
    /// `θ' = θ − a_t · m̂`. The second moment is left untouched.
    pub fn momentum_step(
        &mut self,
        theta: &ParamVector,
        g_hat: &GradientEstimate,
        a_t: f64,
        beta_t: f64,
    ) -> Result<ParamVector> {
        self.check_shape(theta)?;
        check_gradient(theta, &g_hat.g_hat)?;
        check_rate("learning rate", a_t)?;
        check_decay("beta_t", beta_t)?;

        self.push_first_moment(&g_hat.g_hat, beta_t);
        self.t += 1;

        let w = self.weight_mass_m;
        finish(theta.iter().zip(&self.m).map(|(t, m)| t - a_t * m / w).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    Sgd,
    Momentum,
    Adam,
}

impl std::fmt::Display for UpdateRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sgd => "sgd",
            Self::Momentum => "momentum",
            Self::Adam => "adam",
        })
    }
}

/// Optional box constraint applied after each update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipBox {
    pub low: f64,
    pub high: f64,
}

/// Everything needed to run one optimization besides the objective.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub estimator: EstimatorConfig,
    pub update_rule: UpdateRule,
    pub schedules: ScheduleSet,
    /// Evaluation budget in charged `f±` calls.
    pub budget_evaluations: usize,
    pub seed: u64,
    pub clip_box: Option<ClipBox>,
}

impl RunConfig {
    pub fn check(&self) -> Result<()> {
        self.estimator.check()?;
        self.schedules.check()?;
        if let Some(b) = self.clip_box {
            if !(b.low < b.high) {
                return Err(invalid(format!("clip_box needs low < high, got {} .. {}", b.low, b.high)));
            }
        }
        Ok(())
    }
}

/// One parameter update.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    /// Cumulative charged evaluations after this update.
    pub n_evals: usize,
    pub theta: ParamVector,
    /// Monitored loss at the updated parameters.
    pub loss: f64,
    pub a_t: f64,
    pub c_t: f64,
    pub beta_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial_theta: ParamVector,
    /// Monitored loss at the initial parameters; not charged to the budget.
    pub initial_loss: f64,
    pub records: Vec<IterationRecord>,
}

impl Trajectory {
    pub fn final_theta(&self) -> &ParamVector {
        self.records.last().map(|r| &r.theta).unwrap_or(&self.initial_theta)
    }

    pub fn final_loss(&self) -> f64 {
        self.records.last().map(|r| r.loss).unwrap_or(self.initial_loss)
    }

    pub fn total_evaluations(&self) -> usize {
        self.records.last().map(|r| r.n_evals).unwrap_or(0)
    }

    /// Lowest-loss iterate as `(iteration, loss, theta)`, iteration 0 being
    /// the initial point. Ties go to the earliest iteration.
    pub fn best(&self) -> (u64, f64, &ParamVector) {
        let mut best = (0, self.initial_loss, &self.initial_theta);
        for r in &self.records {
            if r.loss < best.1 {
                best = (r.iteration, r.loss, &r.theta);
            }
        }
        best
    }

    /// Lowest monitored loss within the first `n` updates (initial point included).
    pub fn best_loss_within(&self, n: usize) -> f64 {
        self.records.iter().take(n).map(|r| r.loss).fold(self.initial_loss, f64::min)
    }
}

/// A run stopped by a failure, with everything recorded before it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("optimization aborted after {} updates: {source}", trajectory.records.len())]
pub struct Aborted {
    pub trajectory: Trajectory,
    #[source]
    pub source: Error,
}

/// Seeds the estimator's random stream for a run.
pub fn estimator_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

/// Iterates estimate→update until the next update would exceed the budget.
pub fn run_optimization<O: Objective + ?Sized>(
    objective: &mut O,
    cfg: &RunConfig,
    initial: &ParamVector,
) -> std::result::Result<Trajectory, Aborted> {
    let fail = |source: Error, trajectory: Trajectory| Aborted { trajectory, source };
    let empty = |initial_loss: f64| Trajectory { initial_theta: initial.clone(), initial_loss, records: Vec::new() };

    if let Err(e) = cfg.check() {
        return Err(fail(e, empty(f64::NAN)));
    }
    if objective.dim() != initial.len() {
        let e = Error::DimensionMismatch { expected: objective.dim(), got: initial.len() };
        return Err(fail(e, empty(f64::NAN)));
    }

    let initial_loss = match objective.monitor(initial) {
        Ok(v) => v,
        Err(e) => return Err(fail(e, empty(f64::NAN))),
    };
    let mut traj = empty(initial_loss);

    let dim = initial.len();
    let cost = cfg.estimator.cost_per_update(dim);
    let mut rng = estimator_rng(cfg.seed);
    let mut state = AdamState::new(dim);
    let mut theta = initial.clone();
    let mut used = 0usize;
    let mut t = 0u64;

    while used + cost <= cfg.budget_evaluations {
        t += 1;
        let step = (|| -> Result<IterationRecord> {
            let s = &cfg.schedules;
            let a_t = s.learning_rate(t)?;
            let c_t = s.perturbation(t)?;
            let beta_t = s.momentum(t)?;
            let g = cfg.estimator.estimate(objective, &theta, c_t, &mut rng)?;
            let mut next = match cfg.update_rule {
                UpdateRule::Sgd => sgd_step(&theta, &g, a_t)?,
                UpdateRule::Momentum => state.momentum_step(&theta, &g, a_t, beta_t)?,
                UpdateRule::Adam => {
                    let gamma_t = s.second_moment_decay(t)?;
                    state.adam_step(&theta, &g, a_t, beta_t, gamma_t, s.delta)?
                }
            };
            if let Some(b) = cfg.clip_box {
                next = ParamVector::new(next.iter().map(|x| x.clamp(b.low, b.high)).collect())?;
            }
            let charged = g.budget_cost(cfg.estimator.count_baseline);
            let loss = objective.monitor(&next)?;
            Ok(IterationRecord { iteration: t, n_evals: used + charged, theta: next, loss, a_t, c_t, beta_t })
        })();
        match step {
            Ok(rec) => {
                used = rec.n_evals;
                theta = rec.theta.clone();
                traj.records.push(rec);
            }
            Err(e) => return Err(fail(e, traj)),
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::objectives::{FnObjective, Sphere};

    fn grad(g: Vec<f64>) -> GradientEstimate {
        GradientEstimate { g_hat: g, n_evaluations: 0, baseline_evaluations: 0, perturbation_used: 0.0 }
    }

    fn pv(v: Vec<f64>) -> ParamVector {
        ParamVector::new(v).unwrap()
    }

    #[test]
    fn sgd_examples() {
        let t = sgd_step(&pv(vec![0.5]), &grad(vec![2.0]), 0.1).unwrap();
        assert!((t[0] - 0.3).abs() < 1e-15);
        let same = sgd_step(&pv(vec![0.5, 1.0]), &grad(vec![0.0, 0.0]), 0.1).unwrap();
        assert_eq!(same.as_slice(), &[0.5, 1.0]);
        let t = sgd_step(&pv(vec![1.0, 0.0]), &grad(vec![2.0, 2.0]), 0.05).unwrap();
        assert!((t[0] - 0.9).abs() < 1e-15 && (t[1] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn sgd_rejects_nonfinite_gradient() {
        let err = sgd_step(&pv(vec![0.0, 0.0]), &grad(vec![1.0, f64::INFINITY]), 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFinite { component: 1, .. }));
    }

    #[test]
    fn fresh_state_is_zero() {
        let s = AdamState::new(3);
        assert_eq!(s.t, 0);
        assert_eq!(s.weight_mass_m, 0.0);
        assert_eq!(s.weight_mass_v, 0.0);
        assert_eq!(s.m, vec![0.0; 3]);
    }

    #[test]
    fn constant_gradient_moments() {
        let mut s = AdamState::new(1);
        let mut theta = pv(vec![0.0]);
        for t in 1..=50u64 {
            let beta = 0.9 / (t as f64).powf(0.3);
            theta = s.adam_step(&theta, &grad(vec![3.0]), 0.01, beta, 0.999, 1e-8).unwrap();
            assert!((s.m_hat()[0] - 3.0).abs() <= 8.0 * f64::EPSILON * 3.0);
            assert!((s.v_hat()[0] - 9.0).abs() <= 8.0 * f64::EPSILON * 9.0);
        }
    }

    #[test]
    fn zero_decay_large_delta_is_scaled_sgd() {
        let mut s = AdamState::new(2);
        let theta = pv(vec![1.0, -1.0]);
        let g = grad(vec![0.5, -2.0]);
        let delta = 1e6;
        let out = s.adam_step(&theta, &g, 0.1, 0.0, 0.0, delta).unwrap();
        for i in 0..2 {
            let expected = theta[i] - 0.1 * g.g_hat[i] / (g.g_hat[i].abs() + delta);
            assert!((out[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn momentum_without_decay_is_sgd() {
        let mut s = AdamState::new(2);
        let mut a = pv(vec![1.0, 2.0]);
        let mut b = a.clone();
        for k in 0..10 {
            let g = grad(vec![0.3 * k as f64, -1.0 + k as f64]);
            a = s.momentum_step(&a, &g, 0.05, 0.0).unwrap();
            b = sgd_step(&b, &g, 0.05).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn momentum_constant_gradient() {
        let mut s = AdamState::new(1);
        let mut theta = pv(vec![2.0]);
        for k in 1..=10 {
            theta = s.momentum_step(&theta, &grad(vec![1.0]), 0.1, 0.5).unwrap();
            assert!((s.m_hat()[0] - 1.0).abs() < 1e-15);
            assert!((theta[0] - (2.0 - 0.1 * k as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_momentum_uses_raw_gradient() {
        let sched = ScheduleSet { truncation_step: Some(3), beta0: 0.9, lambda: 0.1, ..Default::default() };
        let mut s = AdamState::new(1);
        let mut theta = pv(vec![0.0]);
        for t in 1..=6u64 {
            let g = grad(vec![t as f64]);
            let beta = sched.momentum(t).unwrap();
            let before = theta.clone();
            theta = s.momentum_step(&theta, &g, 0.1, beta).unwrap();
            if t > 3 {
                assert_eq!(beta, 0.0);
                assert!((before[0] - theta[0] - 0.1 * t as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_decay() {
        let mut s = AdamState::new(1);
        let theta = pv(vec![0.0]);
        assert!(s.adam_step(&theta, &grad(vec![1.0]), 0.1, 1.0, 0.5, 1e-8).is_err());
        assert!(s.adam_step(&theta, &grad(vec![1.0]), 0.1, 0.5, 0.5, 0.0).is_err());
        assert!(s.adam_step(&theta, &grad(vec![1.0, 2.0]), 0.1, 0.5, 0.5, 1e-8).is_err());
    }

    fn cfg(kind: EstimatorKind, n: usize, rule: UpdateRule, budget: usize) -> RunConfig {
        RunConfig {
            estimator: EstimatorConfig::new(kind, n),
            update_rule: rule,
            schedules: ScheduleSet::default(),
            budget_evaluations: budget,
            seed: 5,
            clip_box: None,
        }
    }

    #[test]
    fn update_counts_follow_budget() {
        let init = ParamVector::new(vec![0.1; 20]).unwrap();
        let mut f = Sphere { dim: 20 };
        let fd = run_optimization(&mut f, &cfg(EstimatorKind::Fdsa, 1, UpdateRule::Sgd, 480), &init).unwrap();
        assert_eq!(fd.records.len(), 12);
        let sp = run_optimization(&mut f, &cfg(EstimatorKind::Spsa, 1, UpdateRule::Adam, 480), &init).unwrap();
        assert_eq!(sp.records.len(), 240);
        let rs = run_optimization(&mut f, &cfg(EstimatorKind::Rsgf, 2, UpdateRule::Adam, 480), &init).unwrap();
        assert_eq!(rs.records.len(), 240);
        assert_eq!(rs.total_evaluations(), 480);
        let none = run_optimization(&mut f, &cfg(EstimatorKind::Spsa, 1, UpdateRule::Sgd, 0), &init).unwrap();
        assert!(none.records.is_empty());
        assert_eq!(none.final_theta(), &init);
    }

    #[test]
    fn evaluations_strictly_increase() {
        let init = ParamVector::new(vec![0.3, -0.2, 0.5]).unwrap();
        let mut f = Sphere { dim: 3 };
        let tr = run_optimization(&mut f, &cfg(EstimatorKind::Spsa, 1, UpdateRule::Adam, 101), &init).unwrap();
        assert_eq!(tr.records.len(), 50);
        assert!(tr.records.windows(2).all(|w| w[0].n_evals < w[1].n_evals));
        assert!(tr.records.iter().enumerate().all(|(i, r)| r.iteration == i as u64 + 1));
    }

    #[test]
    fn failure_preserves_partial_trajectory() {
        let mut calls = 0;
        let mut f = FnObjective::new(2, move |t: &[f64]| {
            calls += 1;
            if calls > 8 {
                f64::NAN
            } else {
                t.iter().map(|x| x * x).sum()
            }
        });
        struct NanFails<F>(F);
        impl<F: Objective> Objective for NanFails<F> {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
                let v = self.0.evaluate(theta)?;
                if v.is_nan() {
                    Err(Error::Objective("measurement failed".into()))
                } else {
                    Ok(v)
                }
            }
        }
        let mut wrapped = NanFails(&mut f);
        let init = ParamVector::new(vec![1.0, 1.0]).unwrap();
        let err =
            run_optimization(&mut wrapped, &cfg(EstimatorKind::Spsa, 1, UpdateRule::Sgd, 100), &init).unwrap_err();
        // 1 initial monitor, then 3 calls (2 probes + monitor) per update.
        assert_eq!(err.trajectory.records.len(), 2);
        assert!(matches!(err.source, Error::Probe { .. }));
    }

    #[test]
    fn clip_box_bounds_iterates() {
        let init = ParamVector::new(vec![0.0, 0.0]).unwrap();
        let mut f = FnObjective::new(2, |t: &[f64]| -10.0 * (t[0] + t[1]));
        let mut c = cfg(EstimatorKind::Spsa, 1, UpdateRule::Sgd, 200);
        c.schedules.a0 = 1.0;
        c.clip_box = Some(ClipBox { low: -0.5, high: 0.5 });
        let tr = run_optimization(&mut f, &c, &init).unwrap();
        assert!(tr.records.iter().all(|r| r.theta.iter().all(|x| (-0.5..=0.5).contains(x))));
        assert_eq!(tr.final_theta().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn best_prefers_earliest_tie() {
        let init = pv(vec![0.0]);
        let rec = |i: u64, loss: f64| IterationRecord {
            iteration: i,
            n_evals: 2 * i as usize,
            theta: pv(vec![i as f64]),
            loss,
            a_t: 0.0,
            c_t: 0.0,
            beta_t: 0.0,
        };
        let tr =
            Trajectory { initial_theta: init, initial_loss: 1.0, records: vec![rec(1, 0.5), rec(2, 0.2), rec(3, 0.2)] };
        assert_eq!(tr.best().0, 2);
        assert_eq!(tr.best_loss_within(1), 0.5);
    }
}

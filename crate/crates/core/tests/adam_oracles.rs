//! Adam bias correction against a brute-force weight sum and textbook Adam.

use proptest::prelude::*;
use zopt::estimators::{GradientEstimate, ParamVector};
use zopt::optimizers::AdamState;
use zopt::schedules::ScheduleSet;

fn estimate(g: Vec<f64>) -> GradientEstimate {
    GradientEstimate { g_hat: g, n_evaluations: 2, baseline_evaluations: 0, perturbation_used: 0.1 }
}

/// Total EMA weight given to samples `1..=t`, summed term by term:
/// `Σ_{N=0}^{t−1} (1 − β_{t−N}) Π_{i=0}^{N−1} β_{t−i}`.
fn literal_weight_sum(beta: impl Fn(u64) -> f64, t: u64) -> f64 {
    (0..t)
        .map(|n| {
            let prod: f64 = (0..n).map(|i| beta(t - i)).product();
            (1.0 - beta(t - n)) * prod
        })
        .sum()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn recursive_weight_mass_matches_literal_sum() {
    for (beta0, lambda) in [(0.999, 0.4), (0.9, 0.1), (0.5, 0.0), (0.99, 1.2)] {
        let s = ScheduleSet { beta0, lambda, ..ScheduleSet::default() };
        let mut state = AdamState::new(1);
        let mut theta = ParamVector::new(vec![0.0]).unwrap();
        for t in 1..=20u64 {
            let b = s.momentum(t).unwrap();
            let gm = s.second_moment_decay(t).unwrap();
            theta = state.adam_step(&theta, &estimate(vec![1.0]), 0.01, b, gm, 1e-8).unwrap();
            let lit_m = literal_weight_sum(|j| s.momentum(j).unwrap(), t);
            let lit_v = literal_weight_sum(|j| s.second_moment_decay(j).unwrap(), t);
            assert!(rel_err(state.weight_mass_m, lit_m) <= 1e-12, "beta0={beta0} t={t}");
            assert!(rel_err(state.weight_mass_v, lit_v) <= 1e-12, "beta0={beta0} t={t}");
            assert!(state.weight_mass_m > 0.0 && state.weight_mass_m <= 1.0);
        }
    }
}

struct TextbookAdam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl TextbookAdam {
    fn step(&mut self, theta: &[f64], g: &[f64], lr: f64, b1: f64, b2: f64, eps: f64) -> Vec<f64> {
        self.t += 1;
        theta
            .iter()
            .enumerate()
            .map(|(i, th)| {
                self.m[i] = b1 * self.m[i] + (1.0 - b1) * g[i];
                self.v[i] = b2 * self.v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = self.m[i] / (1.0 - b1.powi(self.t));
                let v_hat = self.v[i] / (1.0 - b2.powi(self.t));
                th - lr * m_hat / (v_hat.sqrt() + eps)
            })
            .collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_decay_matches_textbook_adam(
        grads in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..40),
        b1 in 0.5f64..0.99,
        b2 in 0.5f64..0.999,
    ) {
        let mut ours = AdamState::new(3);
        let mut book = TextbookAdam { m: vec![0.0; 3], v: vec![0.0; 3], t: 0 };
        let mut theta = ParamVector::new(vec![0.1, -0.2, 0.3]).unwrap();
        let mut reference = theta.to_vec();
        for g in grads {
            theta = ours.adam_step(&theta, &estimate(g.clone()), 0.01, b1, b2, 1e-8).unwrap();
            reference = book.step(&reference, &g, 0.01, b1, b2, 1e-8);
            for (a, b) in theta.iter().zip(&reference) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{} vs {}", a, b);
            }
        }
    }

    #[test]
    fn constant_gradient_is_recovered_exactly(
        g in prop::collection::vec(-5.0f64..5.0, 1..6),
        steps in 1usize..30,
        beta0 in 0.1f64..0.999,
        lambda in 0.0f64..1.0,
    ) {
        let s = ScheduleSet { beta0, lambda, gamma: beta0, ..ScheduleSet::default() };
        let mut state = AdamState::new(g.len());
        let mut theta = ParamVector::zeros(g.len()).unwrap();
        for t in 1..=steps as u64 {
            let b = s.momentum(t).unwrap();
            theta = state.adam_step(&theta, &estimate(g.clone()), 0.01, b, s.gamma, 1e-8).unwrap();
        }
        for ((m, v), gi) in state.m_hat().iter().zip(state.v_hat()).zip(&g) {
            prop_assert!((m - gi).abs() <= 1e-12 * gi.abs().max(1.0));
            prop_assert!((v - gi * gi).abs() <= 1e-12 * (gi * gi).max(1.0));
        }
        prop_assert!(state.v.iter().all(|v| *v >= 0.0));
    }
}

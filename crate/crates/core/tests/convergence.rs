//! End-to-end runs on a convex quadratic with a known minimizer.

use zopt::estimators::{EstimatorConfig, EstimatorKind, ParamVector};
use zopt::objectives::{Noisy, ShiftedQuadratic};
use zopt::optimizers::{run_optimization, RunConfig, UpdateRule};
use zopt::schedules::ScheduleSet;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn optimizers_find_quadratic_minimum() {
    let center = vec![0.5, -0.3, 0.2, 0.8, -0.6];
    let start = ParamVector::zeros(5).unwrap();
    let cases = [
        (EstimatorKind::Spsa, 1, UpdateRule::Sgd, 0.2),
        (EstimatorKind::Rsgf, 2, UpdateRule::Sgd, 0.1),
        (EstimatorKind::Spsa, 1, UpdateRule::Adam, 0.05),
        (EstimatorKind::Rsgf, 2, UpdateRule::Adam, 0.05),
    ];
    for (estimator, n_samples, update_rule, a0) in cases {
        let quad = ShiftedQuadratic::new(center.clone(), vec![1.0; 5]).unwrap();
        let mut f = Noisy::new(quad, 1e-3, 17).unwrap();
        let cfg = RunConfig {
            estimator: EstimatorConfig::new(estimator, n_samples),
            update_rule,
            schedules: ScheduleSet { a0, c0: 0.05, ..ScheduleSet::default() },
            budget_evaluations: 4000,
            seed: 17,
            clip_box: None,
        };
        let traj = run_optimization(&mut f, &cfg, &start).unwrap();
        assert_eq!(traj.records.len(), 2000);
        let d = distance(traj.final_theta(), &center);
        assert!(d < 0.05, "{estimator}/{update_rule}: distance {d}");
    }
}

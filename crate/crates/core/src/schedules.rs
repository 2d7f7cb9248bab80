//! Power-law annealing sequences for the learning rate, perturbation size and
//! momentum coefficient, plus a checker for the asymptotic-convergence
//! conditions those sequences should satisfy.
//!
//! Step indices start at `t = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Default Adam denominator offset.
pub const DEFAULT_DELTA: f64 = 1e-8;

/// `coeff / t^exponent`.
pub fn power_law_value(coeff: f64, exponent: f64, t: u64) -> Result<f64> {
    if t == 0 {
        return Err(invalid("step index must be >= 1"));
    }
    if !(coeff > 0.0) || !coeff.is_finite() {
        return Err(invalid(format!("coefficient must be positive, got {coeff}")));
    }
    Ok(coeff / (t as f64).powf(exponent))
}

/// Annealing coefficients and exponents for one optimization run.
///
/// `a_t = a0 / t^alpha`, `c_t = c0 / t^zeta`, `beta_t = beta0 / t^lambda`
/// (zero after `truncation_step` when set) and a constant `gamma`.
/// Fields missing from a serialized set take the [`Default`] values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSet {
    pub a0: f64,
    pub alpha: f64,
    pub c0: f64,
    pub zeta: f64,
    pub beta0: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub delta: f64,
    pub truncation_step: Option<u64>,
}

impl Default for ScheduleSet {
    /// The benchmark configuration: `a0 = 0.032`, `c0 = 0.016`,
    /// `beta0 = gamma = 0.999`, `lambda = 0.4` with the standard SPSA exponents.
    fn default() -> Self {
        Self {
            a0: 0.032,
            alpha: 0.602,
            c0: 0.016,
            zeta: 0.101,
            beta0: 0.999,
            lambda: 0.4,
            gamma: 0.999,
            delta: DEFAULT_DELTA,
            truncation_step: None,
        }
    }
}

impl ScheduleSet {
    /// Checks the structural invariants (signs and ranges). Convergence
    /// conditions are reported separately by [`validate_schedules`].
    pub fn check(&self) -> Result<()> {
        let finite = [self.a0, self.alpha, self.c0, self.zeta, self.beta0, self.lambda, self.gamma, self.delta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("schedule parameters must be finite"));
        }
        if self.a0 <= 0.0 {
            return Err(invalid(format!("a0 must be positive, got {}", self.a0)));
        }
        if self.c0 <= 0.0 {
            return Err(invalid(format!("c0 must be positive, got {}", self.c0)));
        }
        if self.delta <= 0.0 {
            return Err(invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if !(0.0..1.0).contains(&self.beta0) {
            return Err(invalid(format!("beta0 must lie in [0, 1), got {}", self.beta0)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if self.alpha <= 0.0 || self.alpha > 1.0 {
            return Err(invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if self.zeta < 0.0 {
            return Err(invalid(format!("zeta must be >= 0, got {}", self.zeta)));
        }
        if self.lambda < 0.0 {
            return Err(invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.truncation_step == Some(0) {
            return Err(invalid("truncation_step must be a positive integer"));
        }
        Ok(())
    }

    pub fn learning_rate(&self, t: u64) -> Result<f64> {
        power_law_value(self.a0, self.alpha, t)
    }

    pub fn perturbation(&self, t: u64) -> Result<f64> {
        power_law_value(self.c0, self.zeta, t)
    }

    /// Momentum coefficient; zero past the truncation step or when `beta0 = 0`.
    pub fn momentum(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(invalid("step index must be >= 1"));
        }
        match self.truncation_step {
            Some(m) if t > m => Ok(0.0),
            _ if self.beta0 == 0.0 => Ok(0.0),
            _ => power_law_value(self.beta0, self.lambda, t),
        }
    }

    /// Second-moment decay. Held constant; the step index is kept so a
    /// time-varying rule can be dropped in.
    pub fn second_moment_decay(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(invalid("step index must be >= 1"));
        }
        Ok(self.gamma)
    }
}

/// One named inequality and whether it held.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub name: &'static str,
    pub passed: bool,
    /// The inequality with the configured values substituted.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub conditions: Vec<ConditionResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.conditions {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark} {:<20} {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

pub const COND_DIVERGENCE: &str = "A1-divergence";
pub const COND_KC: &str = "KC";
pub const COND_ADAPTIVE: &str = "adaptive-divergence";
pub const COND_MOMENTUM: &str = "momentum";

/// Evaluates the sufficient conditions for asymptotic convergence of the
/// power-law schedules. Advisory: a failing report does not stop a run.
pub fn validate_schedules(s: &ScheduleSet) -> ValidationReport {
    let (alpha, zeta, lambda) = (s.alpha, s.zeta, s.lambda);
    let mut conditions = Vec::with_capacity(4);

    conditions.push(ConditionResult {
        name: COND_DIVERGENCE,
        passed: alpha <= 1.0,
        detail: format!("alpha = {alpha} <= 1"),
    });

    let kc = alpha - zeta;
    conditions.push(ConditionResult {
        name: COND_KC,
        passed: kc > 0.5,
        detail: format!("alpha - zeta = {} > 0.5", fmt_sum(kc)),
    });

    let ad = alpha + zeta;
    conditions.push(ConditionResult {
        name: COND_ADAPTIVE,
        passed: ad <= 1.0,
        detail: format!("alpha + zeta = {} <= 1", fmt_sum(ad)),
    });

    let mom = lambda + alpha - zeta;
    let annealed = lambda > 0.0 && mom > 1.0;
    let detail = match s.truncation_step {
        Some(m) => format!("truncated: beta_t = 0 for t > {m} (lambda + alpha - zeta = {})", fmt_sum(mom)),
        None => format!("lambda = {lambda} > 0 and lambda + alpha - zeta = {} > 1", fmt_sum(mom)),
    };
    conditions.push(ConditionResult { name: COND_MOMENTUM, passed: annealed || s.truncation_step.is_some(), detail });

    ValidationReport { conditions }
}

// Sums such as 0.602 - 0.101 carry representation noise; print them rounded.
fn fmt_sum(v: f64) -> String {
    format!("{:.6}", v).trim_end_matches('0').trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_law_examples() {
        assert_eq!(power_law_value(0.032, 0.602, 1).unwrap(), 0.032);
        assert_relative_eq!(power_law_value(0.032, 0.602, 2).unwrap(), 0.021083, epsilon = 5e-7);
        assert_relative_eq!(power_law_value(0.016, 0.101, 10).unwrap(), 0.012680, epsilon = 5e-7);
    }

    #[test]
    fn power_law_rejects_bad_input() {
        assert!(power_law_value(0.1, 0.5, 0).is_err());
        assert!(power_law_value(0.0, 0.5, 1).is_err());
        assert!(power_law_value(-1.0, 0.5, 1).is_err());
    }

    #[test]
    fn benchmark_schedule() {
        let s = ScheduleSet { lambda: 0.502, ..ScheduleSet::default() };
        let report = validate_schedules(&s);
        assert!(report.all_passed(), "{report}");
    }

    #[test]
    fn momentum_condition_fails_without_truncation() {
        let s = ScheduleSet::default();
        let report = validate_schedules(&s);
        assert!(report.get(COND_DIVERGENCE).unwrap().passed);
        assert!(report.get(COND_KC).unwrap().passed);
        assert!(report.get(COND_ADAPTIVE).unwrap().passed);
        assert!(!report.get(COND_MOMENTUM).unwrap().passed);
        assert!(report.get(COND_MOMENTUM).unwrap().detail.contains("0.901"));
    }

    #[test]
    fn truncation_rescues_momentum_condition() {
        let s = ScheduleSet { truncation_step: Some(50), ..ScheduleSet::default() };
        assert!(validate_schedules(&s).all_passed());
        assert!(s.momentum(50).unwrap() > 0.0);
        assert_eq!(s.momentum(51).unwrap(), 0.0);
    }

    #[test]
    fn structural_checks() {
        assert!(ScheduleSet::default().check().is_ok());
        assert!(ScheduleSet { a0: 0.0, ..Default::default() }.check().is_err());
        assert!(ScheduleSet { beta0: 1.0, ..Default::default() }.check().is_err());
        assert!(ScheduleSet { gamma: -0.1, ..Default::default() }.check().is_err());
        assert!(ScheduleSet { delta: 0.0, ..Default::default() }.check().is_err());
        assert!(ScheduleSet { truncation_step: Some(0), ..Default::default() }.check().is_err());
    }

    #[test]
    fn gamma_is_constant() {
        let s = ScheduleSet::default();
        assert_eq!(s.second_moment_decay(1).unwrap(), s.second_moment_decay(1000).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn non_increasing(coeff in 1e-6f64..10.0, exp in 0.0f64..2.0, t in 1u64..100_000) {
                let now = power_law_value(coeff, exp, t).unwrap();
                let next = power_law_value(coeff, exp, t + 1).unwrap();
                prop_assert!(next <= now);
                prop_assert!(next > 0.0);
                prop_assert_eq!(power_law_value(coeff, exp, 1).unwrap(), coeff);
            }

            #[test]
            fn validator_is_pure(alpha in 0.01f64..1.0, zeta in 0.0f64..0.5, lambda in 0.0f64..1.0) {
                let s = ScheduleSet { alpha, zeta, lambda, ..ScheduleSet::default() };
                prop_assert_eq!(validate_schedules(&s), validate_schedules(&s));
            }
        }
    }
}

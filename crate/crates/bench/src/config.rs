//! Experiment configuration, read from a single TOML file.
//!
//! ```toml
//! name = "benchmark_20d"
//! repeats = 5
//!
//! [sim]
//! n_levels = 3
//! shots = 1000
//!
//! [objective]
//! objective = "lx"
//! initial_random = { seed = 7, low = -0.1, high = 0.1 }
//!
//! [schedules]
//! a0 = 0.032
//! c0 = 0.016
//!
//! [optimizer]
//! update_rule = "adam"
//! budget_evaluations = 480
//! seed = 1
//!
//! [[variants]]
//! estimator = "spsa"
//! update_rule = "sgd"
//! ```

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use zopt::estimators::{EstimatorConfig, EstimatorKind, ParamVector};
use zopt::objectives::{
    synthetic_objective, LossKind, Objective, PulseObjective, PulseObjectiveConfig, RbSettings, SyntheticKind,
};
use zopt::optimizers::{ClipBox, RunConfig, UpdateRule};
use zopt::schedules::ScheduleSet;
use zopt::sim::{Shots, TransmonParams, HANN_TERMS, TUNEUP_RB_LENGTHS};

use crate::error::BenchError;

fn one() -> usize {
    1
}

/// Simulated device, pulse timing and readout.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub n_levels: usize,
    pub anharmonicity_mhz: f64,
    pub drive_scale_mhz: f64,
    pub dt_ns: f64,
    pub duration_ns: f64,
    /// Shots per prepared circuit, `0` for exact populations.
    pub shots: Option<u64>,
    pub distortion_fir: Option<Vec<f64>>,
    pub rb_lengths: Vec<usize>,
    pub rb_sequences: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            n_levels: 3,
            anharmonicity_mhz: 320.0,
            drive_scale_mhz: 25.0,
            dt_ns: 1.0,
            duration_ns: 20.0,
            shots: None,
            distortion_fir: None,
            rb_lengths: TUNEUP_RB_LENGTHS.to_vec(),
            rb_sequences: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Lx,
    LCombined,
    LRb,
    Sphere,
    Cubic,
}

impl ObjectiveName {
    pub fn loss_kind(self) -> Option<LossKind> {
        match self {
            Self::Lx => Some(LossKind::Lx),
            Self::LCombined => Some(LossKind::Combined),
            Self::LRb => Some(LossKind::Rb),
            Self::Sphere | Self::Cubic => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInit {
    pub seed: u64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    pub objective: ObjectiveName,
    pub shots: Option<u64>,
    #[serde(default)]
    pub k_list: Option<Vec<u32>>,
    #[serde(default)]
    pub active_dims: Option<Vec<usize>>,
    /// Dimension of a synthetic objective.
    #[serde(default)]
    pub dim: Option<usize>,
    /// Additive Gaussian noise of a synthetic objective.
    #[serde(default)]
    pub noise_sigma: f64,
    /// Explicit starting point in the active dimensions.
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    /// Uniform random starting point, drawn once and shared by all runs.
    #[serde(default)]
    pub initial_random: Option<RandomInit>,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        Self {
            objective: ObjectiveName::LCombined,
            shots: None,
            k_list: None,
            active_dims: None,
            dim: None,
            noise_sigma: 0.0,
            initial: None,
            initial_random: None,
        }
    }
}

/// Partial schedule: unset fields fall back to the experiment's `[schedules]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleOverride {
    pub a0: Option<f64>,
    pub alpha: Option<f64>,
    pub c0: Option<f64>,
    pub zeta: Option<f64>,
    pub beta0: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub truncation_step: Option<u64>,
}

impl ScheduleOverride {
    pub fn apply(&self, base: &ScheduleSet) -> ScheduleSet {
        ScheduleSet {
            a0: self.a0.unwrap_or(base.a0),
            alpha: self.alpha.unwrap_or(base.alpha),
            c0: self.c0.unwrap_or(base.c0),
            zeta: self.zeta.unwrap_or(base.zeta),
            beta0: self.beta0.unwrap_or(base.beta0),
            lambda: self.lambda.unwrap_or(base.lambda),
            gamma: self.gamma.unwrap_or(base.gamma),
            delta: self.delta.unwrap_or(base.delta),
            truncation_step: self.truncation_step.or(base.truncation_step),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub estimator: EstimatorKind,
    #[serde(default = "one")]
    pub n_samples: usize,
    #[serde(default)]
    pub count_baseline: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_rule")]
    pub update_rule: UpdateRule,
    #[serde(default)]
    pub budget_evaluations: usize,
    /// Base seed; repeat `r` runs with `seed + r`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub clip_box: Option<ClipBox>,
}

fn default_rule() -> UpdateRule {
    UpdateRule::Adam
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self { update_rule: UpdateRule::Adam, budget_evaluations: 0, seed: 0, clip_box: None }
    }
}

/// One algorithm in an experiment or one stage of a tune-up. Unset fields
/// inherit from the experiment-level sections.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: Option<String>,
    pub estimator: Option<EstimatorKind>,
    pub n_samples: Option<usize>,
    pub count_baseline: Option<bool>,
    pub update_rule: Option<UpdateRule>,
    pub budget_evaluations: Option<usize>,
    #[serde(default)]
    pub schedules: ScheduleOverride,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

fn default_max_points() -> usize {
    250_000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub x: Axis,
    pub y: Axis,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneupSection {
    pub rough: Variant,
    pub fine: Variant,
    /// Sequences per length for the closing reference/interleaved RB.
    #[serde(default)]
    pub final_rb_sequences: Option<usize>,
    /// Start of the fine stage instead of the rough-stage best iterate
    /// (all 20 coefficients). Skips the rough stage.
    #[serde(default)]
    pub fine_initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub objective: ObjectiveSection,
    #[serde(default)]
    pub schedules: ScheduleSet,
    #[serde(default)]
    pub estimator: Option<EstimatorSection>,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub scan: Option<ScanSection>,
    #[serde(default)]
    pub tuneup: Option<TuneupSection>,
}

/// A variant with every field resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedRun {
    pub label: String,
    pub run: RunConfig,
}

pub fn label_for(estimator: EstimatorKind, rule: UpdateRule) -> String {
    match rule {
        UpdateRule::Sgd => estimator.to_string(),
        other => format!("{other}_{estimator}"),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn check(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("name must be a non-empty file name, got {:?}", self.name));
        }
        if self.repeats == 0 {
            return bad("repeats must be >= 1".into());
        }
        if let (Some(a), Some(b)) = (self.sim.shots, self.objective.shots) {
            if a != b {
                return bad(format!("sim.shots = {a} conflicts with objective.shots = {b}"));
            }
        }
        if self.objective.initial.is_some() && self.objective.initial_random.is_some() {
            return bad("set at most one of objective.initial and objective.initial_random".into());
        }
        if let Some(r) = self.objective.initial_random {
            if !(r.low < r.high) {
                return bad("initial_random needs low < high".into());
            }
        }
        self.schedules.check().map_err(BenchError::from_config)?;
        let mut labels = Vec::new();
        for r in self.resolved_runs()? {
            r.run.check().map_err(BenchError::from_config)?;
            if labels.contains(&r.label) {
                return bad(format!("duplicate variant name {:?}", r.label));
            }
            labels.push(r.label);
        }
        if self.objective.objective.loss_kind().is_some() {
            self.pulse_config()?.check().map_err(BenchError::from_config)?;
        }
        self.dim()?;
        Ok(())
    }

    pub fn shots(&self) -> Shots {
        Shots::from(self.objective.shots.or(self.sim.shots).unwrap_or(1000))
    }

    pub fn pulse_config(&self) -> Result<PulseObjectiveConfig, BenchError> {
        let s = &self.sim;
        let transmon = TransmonParams::from_mhz(s.n_levels, s.anharmonicity_mhz, s.drive_scale_mhz)
            .map_err(BenchError::from_config)?;
        Ok(PulseObjectiveConfig {
            transmon,
            duration: s.duration_ns,
            dt: s.dt_ns,
            distortion_fir: s.distortion_fir.clone(),
            k_list: self.objective.k_list.clone().unwrap_or_else(|| vec![1, 2]),
            shots: self.shots(),
            rb: RbSettings { lengths: s.rb_lengths.clone(), n_sequences: s.rb_sequences },
        })
    }

    /// Dimension of the optimization variable.
    pub fn dim(&self) -> Result<usize, BenchError> {
        let o = &self.objective;
        match o.objective.loss_kind() {
            Some(_) => {
                if o.dim.is_some() {
                    return Err(BenchError::Config("objective.dim applies to synthetic objectives only".into()));
                }
                Ok(o.active_dims.as_ref().map_or(2 * HANN_TERMS, Vec::len))
            }
            None => {
                if o.active_dims.is_some() {
                    return Err(BenchError::Config("active_dims applies to pulse objectives only".into()));
                }
                match o.dim {
                    Some(d) if d >= 1 => Ok(d),
                    _ => Err(BenchError::Config("synthetic objectives need objective.dim >= 1".into())),
                }
            }
        }
    }

    pub fn initial_point(&self) -> Result<ParamVector, BenchError> {
        let dim = self.dim()?;
        let values = match (&self.objective.initial, self.objective.initial_random) {
            (Some(v), _) => {
                if v.len() != dim {
                    return Err(BenchError::Config(format!(
                        "objective.initial has {} entries, expected {dim}",
                        v.len()
                    )));
                }
                v.clone()
            }
            (None, Some(r)) => {
                let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
                (0..dim).map(|_| rng.random_range(r.low..r.high)).collect()
            }
            (None, None) => vec![0.0; dim],
        };
        ParamVector::new(values).map_err(BenchError::from_config)
    }

    /// Objective for one run, with its measurement noise seeded by `seed`.
    pub fn build_objective(&self, seed: u64) -> Result<Box<dyn Objective + Send>, BenchError> {
        let o = &self.objective;
        match o.objective.loss_kind() {
            Some(kind) => {
                let obj = PulseObjective::new(self.pulse_config()?, kind, o.active_dims.clone(), seed)
                    .map_err(BenchError::from_config)?;
                Ok(Box::new(obj))
            }
            None => {
                let kind = match o.objective {
                    ObjectiveName::Sphere => SyntheticKind::Sphere,
                    _ => SyntheticKind::Cubic,
                };
                synthetic_objective(kind, self.dim()?, o.noise_sigma, seed).map_err(BenchError::from_config)
            }
        }
    }

    /// Fills a variant's unset fields from the experiment-level sections.
    pub fn resolve(&self, v: &Variant) -> Result<ResolvedRun, BenchError> {
        let base = self.estimator.as_ref();
        let estimator = v
            .estimator
            .or(base.map(|e| e.estimator))
            .ok_or_else(|| BenchError::Config("no estimator given (set [estimator] or variant.estimator)".into()))?;
        let rsgf_default = if estimator == EstimatorKind::Rsgf { 2 } else { 1 };
        let n_samples = v.n_samples.or(base.map(|e| e.n_samples)).unwrap_or(rsgf_default);
        let count_baseline = v.count_baseline.or(base.map(|e| e.count_baseline)).unwrap_or(false);
        let update_rule = v.update_rule.unwrap_or(self.optimizer.update_rule);
        let run = RunConfig {
            estimator: EstimatorConfig { estimator, n_samples, count_baseline },
            update_rule,
            schedules: v.schedules.apply(&self.schedules),
            budget_evaluations: v.budget_evaluations.unwrap_or(self.optimizer.budget_evaluations),
            seed: self.optimizer.seed,
            clip_box: self.optimizer.clip_box,
        };
        let label = v.name.clone().unwrap_or_else(|| label_for(estimator, update_rule));
        if label.is_empty() || label.contains(['/', '\\']) {
            return Err(BenchError::Config(format!("invalid variant name {label:?}")));
        }
        Ok(ResolvedRun { label, run })
    }

    /// The algorithms of a `run` experiment: the variants, or a single run
    /// built from the top-level sections.
    pub fn resolved_runs(&self) -> Result<Vec<ResolvedRun>, BenchError> {
        if self.variants.is_empty() {
            if self.estimator.is_none() {
                return Ok(Vec::new());
            }
            return Ok(vec![self.resolve(&Variant::default())?]);
        }
        self.variants.iter().map(|v| self.resolve(v)).collect()
    }
}

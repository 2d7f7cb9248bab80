//! The three experiment drivers: seeded repeats, landscape scans and the
//! two-stage gate tune-up.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use zopt::estimators::ParamVector;
use zopt::objectives::{rb_fit_for_gate, LossKind, Objective, PulseObjective};
use zopt::optimizers::{run_optimization, RunConfig, Trajectory};
use zopt::sim::{average_gate_fidelity, interleaved_gate_fidelity, x90, HANN_TERMS};

use crate::config::{ExperimentConfig, ResolvedRun};
use crate::error::BenchError;
use crate::output::{
    loss_curve, summarize, summary_jsonl, trajectory_rows, write_atomic, write_trajectory, SummaryLine,
};

fn create_dir(dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))
}

/// One repeat of one algorithm.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub repeat: usize,
    pub seed: u64,
    pub path: PathBuf,
    /// Full trajectory, or everything recorded before a failure.
    pub trajectory: Trajectory,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct VariantReport {
    pub label: String,
    pub runs: Vec<RunOutcome>,
    pub summary: Vec<SummaryLine>,
    pub summary_path: PathBuf,
}

impl VariantReport {
    pub fn completed(&self) -> impl Iterator<Item = &RunOutcome> {
        self.runs.iter().filter(|r| r.error.is_none())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub dir: PathBuf,
    pub variants: Vec<VariantReport>,
}

impl ExperimentReport {
    pub fn variant(&self, label: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.label == label)
    }

    pub fn failures(&self) -> usize {
        self.variants.iter().map(|v| v.runs.len() - v.completed().count()).sum()
    }
}

/// Runs one optimization and keeps the partial trajectory on failure.
pub fn run_once(
    cfg: &ExperimentConfig,
    run: &RunConfig,
    seed: u64,
) -> Result<(Trajectory, Option<String>), BenchError> {
    let mut objective = cfg.build_objective(seed)?;
    let initial = cfg.initial_point()?;
    let run = RunConfig { seed, ..run.clone() };
    Ok(match run_optimization(objective.as_mut(), &run, &initial) {
        Ok(t) => (t, None),
        Err(aborted) => (aborted.trajectory, Some(aborted.source.to_string())),
    })
}

/// Executes every variant `repeats` times, writing
/// `<out>/<name>/<variant>/run_<r>.csv` and `<variant>/summary.jsonl`.
///
/// A failed run keeps its partial trajectory file plus a `run_<r>.error`
/// note, and the summary is computed over the runs that completed.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport, BenchError> {
    cfg.check()?;
    let variants = cfg.resolved_runs()?;
    if variants.is_empty() {
        return Err(BenchError::Config("run needs [estimator] or at least one [[variants]] entry".into()));
    }
    let dir = out.join(&cfg.name);
    for v in &variants {
        create_dir(&dir.join(&v.label))?;
    }

    let jobs: Vec<(usize, usize)> = (0..variants.len()).flat_map(|v| (0..cfg.repeats).map(move |r| (v, r))).collect();
    let outcomes: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|&(v, r)| -> Result<RunOutcome, BenchError> {
            let ResolvedRun { label, run } = &variants[v];
            let seed = run.seed.wrapping_add(r as u64);
            let (trajectory, error) = run_once(cfg, run, seed)?;
            let path = dir.join(label).join(format!("run_{r}.csv"));
            write_trajectory(&path, r as u64, &trajectory)?;
            let note = path.with_extension("error");
            match &error {
                Some(msg) => write_atomic(&note, format!("{msg}\n").as_bytes())?,
                None if note.exists() => fs::remove_file(&note).map_err(|e| BenchError::io(&note, e))?,
                None => {}
            }
            Ok(RunOutcome { repeat: r, seed, path, trajectory, error })
        })
        .collect::<Result<_, _>>()?;

    let mut reports = Vec::with_capacity(variants.len());
    let mut outcomes = outcomes.into_iter();
    for v in &variants {
        let runs: Vec<RunOutcome> = outcomes.by_ref().take(cfg.repeats).collect();
        for r in runs.iter().filter(|r| r.error.is_some()) {
            eprintln!("warning: {} run {} failed: {}", v.label, r.repeat, r.error.as_deref().unwrap_or(""));
        }
        let curves: Vec<Vec<(usize, f64)>> = runs
            .iter()
            .filter(|r| r.error.is_none())
            .map(|r| loss_curve(&trajectory_rows(r.repeat as u64, &r.trajectory)))
            .collect();
        if curves.len() < runs.len() {
            eprintln!("warning: {} summary uses {} of {} runs", v.label, curves.len(), runs.len());
        }
        let summary = summarize(&curves);
        let summary_path = dir.join(&v.label).join("summary.jsonl");
        write_atomic(&summary_path, summary_jsonl(&summary)?.as_bytes())?;
        reports.push(VariantReport { label: v.label.clone(), runs, summary, summary_path });
    }
    Ok(ExperimentReport { dir, variants: reports })
}

/// Exact-readout loss on a grid over two active dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `loss[j][i]` is the loss at `(x[i], y[j])`.
    pub loss: Vec<Vec<f64>>,
}

pub fn landscape_scan(cfg: &ExperimentConfig) -> Result<ScanResult, BenchError> {
    cfg.check()?;
    let scan = cfg.scan.as_ref().ok_or_else(|| BenchError::Config("scan needs a [scan] section".into()))?;
    if cfg.dim()? != 2 {
        return Err(BenchError::Config(format!("scan needs exactly two active dimensions, got {}", cfg.dim()?)));
    }
    let (x, y) = (scan.x.values(), scan.y.values());
    if x.is_empty() || y.is_empty() {
        return Err(BenchError::Config("scan axes need at least one point".into()));
    }
    let points = x.len().saturating_mul(y.len());
    if points > scan.max_points {
        return Err(BenchError::Config(format!("scan grid has {points} points, cap is {}", scan.max_points)));
    }
    let seed = cfg.optimizer.seed;
    let loss = y
        .par_iter()
        .map(|&yv| -> Result<Vec<f64>, BenchError> {
            let mut obj = cfg.build_objective(seed)?;
            x.iter().map(|&xv| obj.monitor(&[xv, yv]).map_err(BenchError::from)).collect()
        })
        .collect::<Result<_, _>>()?;
    Ok(ScanResult { x, y, loss })
}

/// Matrix CSV: the first row holds the x values, each later row a y value
/// followed by the losses along x.
pub fn scan_csv(s: &ScanResult) -> String {
    let mut out = String::from("y\\x");
    for x in &s.x {
        out.push_str(&format!(",{x}"));
    }
    out.push('\n');
    for (y, row) in s.y.iter().zip(&s.loss) {
        out.push_str(&y.to_string());
        for l in row {
            out.push_str(&format!(",{l}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_scan(cfg: &ExperimentConfig, s: &ScanResult, out: &Path) -> Result<PathBuf, BenchError> {
    let dir = out.join(&cfg.name);
    create_dir(&dir)?;
    let path = dir.join("scan.csv");
    write_atomic(&path, scan_csv(s).as_bytes())?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub label: String,
    pub seed: u64,
    #[serde(skip)]
    pub trajectory: Trajectory,
    pub updates: usize,
    pub evaluations: usize,
    pub best_iteration: u64,
    pub best_loss: f64,
    pub best_theta: Vec<f64>,
}

impl StageReport {
    fn new(label: String, seed: u64, trajectory: Trajectory) -> Self {
        let (best_iteration, best_loss, best) = trajectory.best();
        let best_theta = best.to_vec();
        Self {
            label,
            seed,
            updates: trajectory.records.len(),
            evaluations: trajectory.total_evaluations(),
            best_iteration,
            best_loss,
            best_theta,
            trajectory,
        }
    }
}

/// Reference and interleaved RB of the tuned gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FinalRb {
    pub p_ref: f64,
    pub p_ref_se: f64,
    pub p_int: f64,
    pub p_int_se: f64,
    pub interleaved_fidelity: f64,
    /// First-order propagation of the two decay-rate standard errors.
    pub interleaved_fidelity_se: f64,
    pub suspicious: bool,
    /// Average gate fidelity of the simulated propagator itself.
    pub direct_fidelity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneupReport {
    pub rough: Option<StageReport>,
    pub fine: StageReport,
    pub final_rb: FinalRb,
}

/// Fine-stage seeds are offset so the two stages never share a random stream.
pub const FINE_SEED_OFFSET: u64 = 1 << 32;

fn stage_objective(cfg: &ExperimentConfig, kind: LossKind, seed: u64) -> Result<PulseObjective, BenchError> {
    PulseObjective::new(cfg.pulse_config()?, kind, None, seed).map_err(BenchError::from_config)
}

/// Rough stage on `L` from the zero vector, fine stage on `L_RB` from the
/// rough stage's best iterate, then interleaved RB of the fine stage's best
/// iterate. Trajectories go to `<dir>/rough.csv` and `<dir>/fine.csv`, the
/// report to `<dir>/tuneup.json`.
pub fn two_stage_tuneup(cfg: &ExperimentConfig, seed: u64, dir: &Path) -> Result<TuneupReport, BenchError> {
    cfg.check()?;
    let t = cfg.tuneup.as_ref().ok_or_else(|| BenchError::Config("tuneup needs a [tuneup] section".into()))?;
    if cfg.objective.active_dims.is_some() {
        return Err(BenchError::Config("tuneup optimizes all 20 coefficients; remove active_dims".into()));
    }
    if cfg.objective.objective.loss_kind().is_none() {
        return Err(BenchError::Config("tuneup needs a pulse objective".into()));
    }
    let rough_run = cfg.resolve(&t.rough)?;
    let fine_run = cfg.resolve(&t.fine)?;
    rough_run.run.check().map_err(BenchError::from_config)?;
    fine_run.run.check().map_err(BenchError::from_config)?;
    create_dir(dir)?;

    let stage = |run: &ResolvedRun, kind: LossKind, seed: u64, start: &ParamVector, file: &str| {
        let mut obj = stage_objective(cfg, kind, seed)?;
        let rc = RunConfig { seed, ..run.run.clone() };
        let result = run_optimization(&mut obj, &rc, start);
        let (traj, err) = match result {
            Ok(tr) => (tr, None),
            Err(a) => (a.trajectory, Some(a.source)),
        };
        write_trajectory(&dir.join(file), 0, &traj)?;
        if let Some(e) = err {
            return Err(BenchError::Runtime(format!(
                "{file} stage aborted after {} updates (partial trajectory kept): {e}",
                traj.records.len()
            )));
        }
        Ok::<_, BenchError>((obj, StageReport::new(run.label.clone(), seed, traj)))
    };

    let (rough, fine_start) = match &t.fine_initial {
        Some(v) => {
            if v.len() != 2 * HANN_TERMS {
                return Err(BenchError::Config(format!("fine_initial needs {} entries", 2 * HANN_TERMS)));
            }
            (None, ParamVector::new(v.clone()).map_err(BenchError::from_config)?)
        }
        None => {
            let zero = ParamVector::zeros(2 * HANN_TERMS)?;
            let (_, report) = stage(&rough_run, LossKind::Combined, seed, &zero, "rough.csv")?;
            let start = ParamVector::new(report.best_theta.clone())?;
            (Some(report), start)
        }
    };

    let fine_seed = seed.wrapping_add(FINE_SEED_OFFSET);
    let (fine_obj, fine) = stage(&fine_run, LossKind::Rb, fine_seed, &fine_start, "fine.csv")?;

    let gate = fine_obj.gate(&fine.best_theta)?;
    let mut rb_cfg = cfg.pulse_config()?;
    if let Some(n) = t.final_rb_sequences {
        rb_cfg.rb.n_sequences = n;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(fine_seed);
    rng.set_stream(3);
    let reference = rb_fit_for_gate(&gate, &rb_cfg, false, &mut rng)?;
    let interleaved = rb_fit_for_gate(&gate, &rb_cfg, true, &mut rng)?;
    let est = interleaved_gate_fidelity(reference.decay_rate, interleaved.decay_rate)?;
    let ratio = interleaved.decay_rate / reference.decay_rate;
    let rel = ((interleaved.decay_rate_se / interleaved.decay_rate).powi(2)
        + (reference.decay_rate_se / reference.decay_rate).powi(2))
    .sqrt();
    let final_rb = FinalRb {
        p_ref: reference.decay_rate,
        p_ref_se: reference.decay_rate_se,
        p_int: interleaved.decay_rate,
        p_int_se: interleaved.decay_rate_se,
        interleaved_fidelity: est.fidelity,
        interleaved_fidelity_se: 0.5 * ratio * rel,
        suspicious: est.suspicious,
        direct_fidelity: average_gate_fidelity(&gate, &x90())?,
    };
    let report = TuneupReport { rough, fine, final_rb };
    let json = serde_json::to_string_pretty(&report).map_err(|e| BenchError::Runtime(e.to_string()))?;
    write_atomic(&dir.join("tuneup.json"), format!("{json}\n").as_bytes())?;
    Ok(report)
}

/// Runs the tune-up for every repeat in `<out>/<name>/rep_<r>/`.
pub fn run_tuneups(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<TuneupReport>, BenchError> {
    let dir = out.join(&cfg.name);
    (0..cfg.repeats)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.optimizer.seed.wrapping_add(r as u64);
            two_stage_tuneup(cfg, seed, &dir.join(format!("rep_{r}")))
        })
        .collect()
}

//! Trajectory CSV files and JSON-lines summaries.
//!
//! Floats are written with Rust's shortest round-trip formatting so that
//! statistics recomputed from the files match the in-memory values bit for
//! bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use zopt::optimizers::Trajectory;

use crate::error::BenchError;

pub const FIXED_COLUMNS: [&str; 7] = ["run_id", "iteration", "n_evals", "loss", "a_t", "c_t", "beta_t"];

pub fn trajectory_header(dim: usize) -> Vec<String> {
    FIXED_COLUMNS.iter().map(|s| s.to_string()).chain((0..dim).map(|i| format!("theta_{i}"))).collect()
}

/// One CSV row. Iteration 0 is the starting point, before any update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub run_id: u64,
    pub iteration: u64,
    pub n_evals: usize,
    pub loss: f64,
    pub a_t: f64,
    pub c_t: f64,
    pub beta_t: f64,
    pub theta: Vec<f64>,
}

pub fn trajectory_rows(run_id: u64, traj: &Trajectory) -> Vec<TrajectoryRow> {
    let start = TrajectoryRow {
        run_id,
        iteration: 0,
        n_evals: 0,
        loss: traj.initial_loss,
        a_t: 0.0,
        c_t: 0.0,
        beta_t: 0.0,
        theta: traj.initial_theta.to_vec(),
    };
    std::iter::once(start)
        .chain(traj.records.iter().map(|r| TrajectoryRow {
            run_id,
            iteration: r.iteration,
            n_evals: r.n_evals,
            loss: r.loss,
            a_t: r.a_t,
            c_t: r.c_t,
            beta_t: r.beta_t,
            theta: r.theta.to_vec(),
        }))
        .collect()
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), BenchError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| BenchError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| BenchError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| BenchError::io(path, e))
}

pub fn trajectory_csv(run_id: u64, traj: &Trajectory) -> Result<Vec<u8>, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| BenchError::Runtime(format!("csv encoding failed: {e}"));
    w.write_record(trajectory_header(traj.initial_theta.len())).map_err(csv_err)?;
    for row in trajectory_rows(run_id, traj) {
        let mut fields = vec![
            row.run_id.to_string(),
            row.iteration.to_string(),
            row.n_evals.to_string(),
            row.loss.to_string(),
            row.a_t.to_string(),
            row.c_t.to_string(),
            row.beta_t.to_string(),
        ];
        fields.extend(row.theta.iter().map(f64::to_string));
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| BenchError::Runtime(format!("csv encoding failed: {e}")))
}

pub fn write_trajectory(path: &Path, run_id: u64, traj: &Trajectory) -> Result<(), BenchError> {
    write_atomic(path, &trajectory_csv(run_id, traj)?)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectoryRow>, BenchError> {
    let bad = |m: String| BenchError::Runtime(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    if header.len() < FIXED_COLUMNS.len() || header != trajectory_header(header.len() - FIXED_COLUMNS.len()) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let f = |i: usize| rec[i].parse::<f64>().map_err(|e| bad(format!("column {}: {e}", header[i])));
        let u = |i: usize| rec[i].parse::<u64>().map_err(|e| bad(format!("column {}: {e}", header[i])));
        rows.push(TrajectoryRow {
            run_id: u(0)?,
            iteration: u(1)?,
            n_evals: u(2)? as usize,
            loss: f(3)?,
            a_t: f(4)?,
            c_t: f(5)?,
            beta_t: f(6)?,
            theta: (FIXED_COLUMNS.len()..rec.len()).map(f).collect::<Result<_, _>>()?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryLine {
    pub n_evals: usize,
    pub loss_mean: f64,
    pub loss_std: f64,
    pub n_runs: usize,
}

/// Mean and sample standard deviation of the loss across runs at every
/// evaluation count reached by all runs. Each run is a list of
/// `(n_evals, loss)` pairs in increasing `n_evals` order.
pub fn summarize(runs: &[Vec<(usize, f64)>]) -> Vec<SummaryLine> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let n = runs.len();
    first
        .iter()
        .filter_map(|&(n_evals, _)| {
            let losses: Vec<f64> =
                runs.iter().map(|r| r.iter().find(|(k, _)| *k == n_evals).map(|(_, l)| *l)).collect::<Option<_>>()?;
            let mean = losses.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            Some(SummaryLine { n_evals, loss_mean: mean, loss_std: std, n_runs: n })
        })
        .collect()
}

pub fn summary_jsonl(lines: &[SummaryLine]) -> Result<String, BenchError> {
    let mut out = String::new();
    for l in lines {
        out.push_str(&serde_json::to_string(l).map_err(|e| BenchError::Runtime(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryLine>, BenchError> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| BenchError::Runtime(format!("{}: {e}", path.display()))))
        .collect()
}

/// `(n_evals, loss)` pairs of a trajectory file, for [`summarize`].
pub fn loss_curve(rows: &[TrajectoryRow]) -> Vec<(usize, f64)> {
    rows.iter().map(|r| (r.n_evals, r.loss)).collect()
}

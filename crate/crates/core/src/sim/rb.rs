//! Clifford randomized benchmarking and the `A pᵐ + B` decay fit.
//!
//! The gate under test plays the X90 role inside every Clifford; the other
//! native gates are ideal. Recovery gates are chosen from the ideal group
//! composition, so any deviation of the gate under test shows up as decay.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::clifford::{CliffordGroup, Generator};
use super::evolve::{Propagator, QuantumState, C64};
use super::measure::{measure_population, Shots};
use crate::error::{invalid, Error, Result};

/// Clifford counts used for the gate tune-up.
pub const TUNEUP_RB_LENGTHS: [usize; 30] = [
    0, 1, 2, 3, 4, 5, 6, 8, 11, 14, 19, 25, 32, 42, 55, 72, 93, 122, 159, 208, 272, 355, 463, 605, 790, 1032, 1347,
    1759, 2297, 3000,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbConfig {
    pub lengths: Vec<usize>,
    pub n_sequences: usize,
    pub shots: Shots,
    pub interleaved: bool,
}

impl RbConfig {
    pub fn check(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(invalid("at least one sequence length is required"));
        }
        if self.n_sequences == 0 {
            return Err(invalid("n_sequences must be >= 1"));
        }
        Ok(())
    }
}

/// Mean ground-state survival per sequence length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbData {
    pub lengths: Vec<usize>,
    pub survival: Vec<f64>,
}

fn ideal_gate(g: Generator, n_levels: usize) -> Propagator {
    Propagator::embed_qubit(&g.ideal(), n_levels)
}

fn apply(m: &DMatrix<C64>, psi: &mut DVector<C64>, scratch: &mut DVector<C64>) {
    m.mul_to(psi, scratch);
    std::mem::swap(psi, scratch);
}

/// Shared sequence driver. `apply_clifford(k, ψ, rng)` applies the realized
/// Clifford `k`; `apply_gut(ψ, rng)` applies the gate under test.
fn simulate<R, A, G>(
    group: &CliffordGroup,
    cfg: &RbConfig,
    n_levels: usize,
    rng: &mut R,
    mut apply_clifford: A,
    mut apply_gut: G,
) -> Result<RbData>
where
    R: Rng + ?Sized,
    A: FnMut(usize, &mut DVector<C64>, &mut DVector<C64>, &mut R),
    G: FnMut(&mut DVector<C64>, &mut DVector<C64>, &mut R),
{
    cfg.check()?;
    let mut survival = Vec::with_capacity(cfg.lengths.len());
    let mut scratch = DVector::from_element(n_levels, C64::new(0.0, 0.0));
    for &m in &cfg.lengths {
        let mut total = 0.0;
        for _ in 0..cfg.n_sequences {
            let mut psi = QuantumState::ground(n_levels).0;
            let mut net = group.identity();
            for _ in 0..m {
                let k = rng.random_range(0..group.len());
                apply_clifford(k, &mut psi, &mut scratch, rng);
                net = group.then(net, k);
                if cfg.interleaved {
                    apply_gut(&mut psi, &mut scratch, rng);
                    net = group.then(net, group.x90_index());
                }
            }
            let recovery = group.inverse(net);
            apply_clifford(recovery, &mut psi, &mut scratch, rng);
            if group.then(net, recovery) != group.identity() {
                return Err(Error::Invariant("recovery Clifford does not invert the sequence".into()));
            }
            let state = QuantumState(psi);
            let norm = state.norm();
            let state = QuantumState(state.0.unscale(norm));
            total += measure_population(&state, cfg.shots, rng)?.ground;
        }
        survival.push(total / cfg.n_sequences as f64);
    }
    Ok(RbData { lengths: cfg.lengths.clone(), survival })
}

/// Runs (interleaved) RB with a fixed realization of the gate under test.
pub fn run_rb<R: Rng + ?Sized>(gate_under_test: &Propagator, cfg: &RbConfig, rng: &mut R) -> Result<RbData> {
    let n_levels = gate_under_test.dim();
    if n_levels < 2 {
        return Err(invalid("gate under test must act on at least two levels"));
    }
    let group = CliffordGroup::new()?;
    let realized: Vec<DMatrix<C64>> = group
        .elements()
        .iter()
        .map(|c| {
            c.word
                .iter()
                .map(|&g| match g {
                    Generator::X90 => gate_under_test.clone(),
                    other => ideal_gate(other, n_levels),
                })
                .fold(Propagator::identity(n_levels), |acc, u| acc.then(&u))
                .0
        })
        .collect();
    let gut = gate_under_test.matrix().clone();
    simulate(
        &group,
        cfg,
        n_levels,
        rng,
        |k, psi, scratch, _| apply(&realized[k], psi, scratch),
        |psi, scratch, _| apply(&gut, psi, scratch),
    )
}

/// RB where every use of the gate under test draws a fresh realization,
/// e.g. to model stochastic errors.
pub fn run_rb_sampled<R, F>(n_levels: usize, mut sample_gate: F, cfg: &RbConfig, rng: &mut R) -> Result<RbData>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Propagator,
{
    let group = CliffordGroup::new()?;
    let ideal: Vec<DMatrix<C64>> = Generator::ALL.iter().map(|&g| ideal_gate(g, n_levels).0).collect();
    let words: Vec<Vec<Generator>> = group.elements().iter().map(|c| c.word.clone()).collect();
    let sampler = std::cell::RefCell::new(&mut sample_gate);
    let gate_for = |g: Generator, rng: &mut R| -> DMatrix<C64> {
        match g {
            Generator::X90 => (*sampler.borrow_mut())(rng).0,
            other => ideal[other as usize].clone(),
        }
    };
    simulate(
        &group,
        cfg,
        n_levels,
        rng,
        |k, psi, scratch, rng| {
            for &g in &words[k] {
                let m = gate_for(g, rng);
                apply(&m, psi, scratch);
            }
        },
        |psi, scratch, rng| {
            let m = gate_for(Generator::X90, rng);
            apply(&m, psi, scratch);
        },
    )
}

/// Least-squares fit of `A pᵐ + B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbFitResult {
    pub amplitude: f64,
    pub offset: f64,
    /// Decay per Clifford.
    pub decay_rate: f64,
    pub amplitude_se: f64,
    pub offset_se: f64,
    pub decay_rate_se: f64,
    /// Residual sum of squares.
    pub rss: f64,
    /// Flat data: amplitude and offset are not separately identifiable.
    pub degenerate: bool,
}

const P_MIN: f64 = 1e-9;
const P_MAX: f64 = 1.01;
const GRID_POINTS: usize = 400;
const GOLDEN_ITERS: usize = 100;

fn model(x: &Vector3<f64>, m: usize) -> f64 {
    x[0] * x[2].powi(m as i32) + x[1]
}

fn jacobian_row(x: &Vector3<f64>, m: usize) -> Vector3<f64> {
    let pm = x[2].powi(m as i32);
    let dp = if m == 0 { 0.0 } else { x[0] * m as f64 * x[2].powi(m as i32 - 1) };
    Vector3::new(pm, 1.0, dp)
}

fn normal_equations(x: &Vector3<f64>, ms: &[usize], ys: &[f64]) -> (Matrix3<f64>, Vector3<f64>) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    for (&m, &y) in ms.iter().zip(ys) {
        let j = jacobian_row(x, m);
        let r = model(x, m) - y;
        jtj += j * j.transpose();
        jtr += j * r;
    }
    (jtj, jtr)
}

/// Least-squares `A`, `B` and the residual for a fixed `p = exp(−r)`.
fn linear_fit(r: f64, ms: &[usize], ys: &[f64]) -> (f64, f64, f64) {
    let n = ms.len() as f64;
    let xs: Vec<f64> = ms.iter().map(|&m| (-r * m as f64).exp()).collect();
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let (a, b) =
        if det > 1e-12 * n * sxx { ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det) } else { (0.0, sy / n) };
    let cost = xs.iter().zip(ys).map(|(x, y)| (a * x + b - y).powi(2)).sum();
    (a, b, cost)
}

/// Variable-projection fit: for fixed `p` the model is linear in `A` and `B`,
/// so only the one-dimensional profile over `p` is searched (log-spaced grid
/// in `−ln p`, then golden section between the grid neighbours).
pub fn fit_rb_decay(data: &RbData) -> Result<RbFitResult> {
    let ms = &data.lengths;
    let ys = &data.survival;
    if ms.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: ms.len(), got: ys.len() });
    }
    let mut distinct = ms.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(invalid("decay fit needs at least 3 distinct lengths"));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(invalid("survival data must be finite"));
    }

    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let spread = ys.iter().fold(0.0f64, |acc, y| acc.max((y - mean).abs()));
    if spread <= 1e-12 * mean.abs().max(1.0) {
        return Ok(RbFitResult {
            amplitude: 0.0,
            offset: mean,
            decay_rate: 1.0,
            amplitude_se: f64::NAN,
            offset_se: 0.0,
            decay_rate_se: f64::NAN,
            rss: 0.0,
            degenerate: true,
        });
    }

    let profile = |r: f64| linear_fit(r, ms, ys);
    let r_max = -P_MIN.ln();
    let r_min = -P_MAX.ln();
    let mut grid: Vec<f64> = (0..20).map(|i| r_min * (1.0 - i as f64 / 20.0)).collect();
    grid.push(0.0);
    let (lo, hi) = (-8.0, r_max.log10());
    grid.extend((0..GRID_POINTS).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64)));
    let best =
        (0..grid.len()).min_by(|&i, &j| profile(grid[i]).2.total_cmp(&profile(grid[j]).2)).expect("grid is not empty");
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    for _ in 0..GOLDEN_ITERS {
        if profile(c).2 < profile(d).2 {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    let mid = 0.5 * (a + b);
    let r = if profile(mid).2 <= profile(grid[best]).2 { mid } else { grid[best] };
    let (amp, offset, cost) = profile(r);
    let x = Vector3::new(amp, offset, (-r).exp());

    let (jtj, _) = normal_equations(&x, ms, ys);
    let dof = ms.len().saturating_sub(3).max(1) as f64;
    let s2 = cost / dof;
    let se = jtj
        .try_inverse()
        .map(|inv| Vector3::new((s2 * inv[(0, 0)]).sqrt(), (s2 * inv[(1, 1)]).sqrt(), (s2 * inv[(2, 2)]).sqrt()))
        .unwrap_or_else(|| Vector3::repeat(f64::NAN));
    Ok(RbFitResult {
        amplitude: x[0],
        offset: x[1],
        decay_rate: x[2],
        amplitude_se: se[0],
        offset_se: se[1],
        decay_rate_se: se[2],
        rss: cost,
        degenerate: false,
    })
}

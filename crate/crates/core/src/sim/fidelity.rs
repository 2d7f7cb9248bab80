//! Gate fidelity measures and ideal single-qubit rotations.

use nalgebra::DMatrix;

use super::evolve::{Propagator, C64};
use crate::error::{invalid, Result};

/// `exp(−i (angle/2) (nx σx + ny σy + nz σz))` as a 2×2 matrix.
pub fn rotation(nx: f64, ny: f64, nz: f64, angle: f64) -> DMatrix<C64> {
    let norm = (nx * nx + ny * ny + nz * nz).sqrt();
    let (nx, ny, nz) = (nx / norm, ny / norm, nz / norm);
    let (s, c) = (angle / 2.0).sin_cos();
    let ci = C64::new(c, 0.0);
    DMatrix::from_row_slice(
        2,
        2,
        &[
            ci - C64::new(0.0, s * nz),
            C64::new(-s * ny, -s * nx),
            C64::new(s * ny, -s * nx),
            ci + C64::new(0.0, s * nz),
        ],
    )
}

pub fn x_rotation(angle: f64) -> DMatrix<C64> {
    rotation(1.0, 0.0, 0.0, angle)
}

pub fn y_rotation(angle: f64) -> DMatrix<C64> {
    rotation(0.0, 1.0, 0.0, angle)
}

pub fn z_rotation(angle: f64) -> DMatrix<C64> {
    rotation(0.0, 0.0, 1.0, angle)
}

/// Ideal `X90 = exp(−i π/4 σx)`.
pub fn x90() -> DMatrix<C64> {
    x_rotation(std::f64::consts::FRAC_PI_2)
}

/// Ideal `Y90 = exp(−i π/4 σy)`.
pub fn y90() -> DMatrix<C64> {
    y_rotation(std::f64::consts::FRAC_PI_2)
}

/// Average gate fidelity of the simulated gate's computational block against
/// a 2×2 target: `(Tr(M†M) + |Tr M|²) / 6` with `M = U_ideal† · P U_sim P`.
/// Population leaking out of the qubit subspace lowers `Tr(M†M)`.
pub fn average_gate_fidelity(u_sim: &Propagator, u_ideal: &DMatrix<C64>) -> Result<f64> {
    if u_sim.dim() < 2 {
        return Err(invalid("simulated propagator must be at least 2x2"));
    }
    if u_ideal.nrows() != 2 || u_ideal.ncols() != 2 {
        return Err(invalid("ideal gate must be 2x2"));
    }
    let m = u_ideal.adjoint() * u_sim.qubit_block();
    let tr_mm = (m.adjoint() * &m).trace().re;
    let tr = m.trace().norm_sqr();
    Ok((tr_mm + tr) / 6.0)
}

/// Gate fidelity estimated from reference and interleaved decay rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterleavedEstimate {
    pub fidelity: f64,
    /// Set when the interleaved decay exceeds the reference decay by more
    /// than the tolerance, which only noise can explain.
    pub suspicious: bool,
}

/// Excess of `p_int` over `p_ref` tolerated before flagging.
pub const INTERLEAVED_TOLERANCE: f64 = 1e-4;

/// `1 − (1 − p_int / p_ref) / 2` for a single qubit.
pub fn interleaved_gate_fidelity(p_ref: f64, p_int: f64) -> Result<InterleavedEstimate> {
    for (name, p) in [("p_ref", p_ref), ("p_int", p_int)] {
        if !(p > 0.0 && p <= 1.0 + 0.01) {
            return Err(invalid(format!("{name} must lie in (0, 1], got {p}")));
        }
    }
    Ok(InterleavedEstimate {
        fidelity: 1.0 - (1.0 - p_int / p_ref) / 2.0,
        suspicious: p_int > p_ref + INTERLEAVED_TOLERANCE,
    })
}

//! Driven transmon propagators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::pulse::PulseSequence;
use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

/// Tolerated `max |U†U − I|` before a propagator is rejected.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;

/// Converts a frequency in MHz to angular frequency in rad/ns.
pub fn mhz_to_rad_per_ns(mhz: f64) -> f64 {
    2.0 * std::f64::consts::PI * mhz * 1e-3
}

/// Device model in the frame rotating at the 0↔1 transition, resonant drive,
/// rotating-wave approximation:
///
/// `H(t) = −(α/2) a†a†aa + (Ω/2) (I(t) (a + a†) + Q(t) i(a† − a))`
///
/// with `α` the anharmonicity and `Ω` the drive scale, both in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams {
    pub n_levels: usize,
    pub anharmonicity: f64,
    pub drive_scale: f64,
}

impl Default for TransmonParams {
    /// Three levels, `α/2π = 320 MHz`, unit amplitude ↦ `Ω/2π = 25 MHz`.
    fn default() -> Self {
        Self { n_levels: 3, anharmonicity: mhz_to_rad_per_ns(320.0), drive_scale: mhz_to_rad_per_ns(25.0) }
    }
}

impl TransmonParams {
    pub fn from_mhz(n_levels: usize, anharmonicity_mhz: f64, drive_scale_mhz: f64) -> Result<Self> {
        let p = Self {
            n_levels,
            anharmonicity: mhz_to_rad_per_ns(anharmonicity_mhz),
            drive_scale: mhz_to_rad_per_ns(drive_scale_mhz),
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(2..=4).contains(&self.n_levels) {
            return Err(invalid(format!("n_levels must be 2, 3 or 4, got {}", self.n_levels)));
        }
        if !(self.anharmonicity > 0.0) || !self.anharmonicity.is_finite() {
            return Err(invalid("anharmonicity must be positive"));
        }
        if !(self.drive_scale > 0.0) || !self.drive_scale.is_finite() {
            return Err(invalid("drive_scale must be positive"));
        }
        Ok(())
    }

    /// Diagonal of `−(α/2) a†a†aa`, i.e. `−(α/2) n (n − 1)`.
    pub fn drift_diagonal(&self) -> Vec<f64> {
        (0..self.n_levels).map(|n| -0.5 * self.anharmonicity * (n * n.saturating_sub(1)) as f64).collect()
    }

    /// Full Hamiltonian for one piecewise-constant segment.
    pub fn hamiltonian(&self, i_amp: f64, q_amp: f64) -> DMatrix<C64> {
        let d = self.n_levels;
        let drift = self.drift_diagonal();
        let mut h = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for n in 0..d {
            h[(n, n)] = C64::new(drift[n], 0.0);
        }
        let half = 0.5 * self.drive_scale;
        for n in 0..d - 1 {
            // <n+1| a† |n> = sqrt(n+1)
            let g = half * ((n + 1) as f64).sqrt();
            // I (a + a†) + Q i(a† − a): lower element I + iQ, upper I − iQ.
            h[(n + 1, n)] = C64::new(g * i_amp, g * q_amp);
            h[(n, n + 1)] = C64::new(g * i_amp, -g * q_amp);
        }
        h
    }
}

/// A state vector over the transmon levels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState(pub DVector<C64>);

impl QuantumState {
    pub fn basis(n_levels: usize, level: usize) -> Self {
        let mut v = DVector::from_element(n_levels, C64::new(0.0, 0.0));
        v[level] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn ground(n_levels: usize) -> Self {
        Self::basis(n_levels, 0)
    }

    pub fn from_amplitudes(amps: &[C64]) -> Result<Self> {
        let s = Self(DVector::from_column_slice(amps));
        if (s.norm() - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("state norm is {}, expected 1", s.norm())));
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// A time-evolution operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator(pub DMatrix<C64>);

impl Propagator {
    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// Embeds a 2×2 unitary on levels {0, 1}, identity elsewhere.
    pub fn embed_qubit(u: &DMatrix<C64>, n_levels: usize) -> Self {
        let mut m = DMatrix::identity(n_levels, n_levels);
        m.view_mut((0, 0), (2, 2)).copy_from(u);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    /// `later · self`: apply `self` first, then `later`.
    pub fn then(&self, later: &Propagator) -> Propagator {
        Propagator(&later.0 * &self.0)
    }

    /// `selfᵏ`.
    pub fn pow(&self, k: u32) -> Propagator {
        let mut out = Propagator::identity(self.dim());
        for _ in 0..k {
            out = self.then(&out);
        }
        out
    }

    pub fn apply(&self, state: &QuantumState) -> QuantumState {
        QuantumState(&self.0 * &state.0)
    }

    pub fn adjoint(&self) -> Propagator {
        Propagator(self.0.adjoint())
    }

    /// `max |U†U − I|` over matrix entries.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        let prod = self.0.adjoint() * &self.0;
        let id = DMatrix::<C64>::identity(d, d);
        (prod - id).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// The 2×2 block on levels {0, 1}.
    pub fn qubit_block(&self) -> DMatrix<C64> {
        self.0.view((0, 0), (2, 2)).into_owned()
    }
}

/// `exp(−i H dt)` for Hermitian `H` via its eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C64>, dt: f64) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * dt)));
    v * phases * v.adjoint()
}

/// Time-ordered propagator of the piecewise-constant drive.
pub fn evolve(pulse: &PulseSequence, params: &TransmonParams) -> Result<Propagator> {
    pulse.check()?;
    params.check()?;
    let (i_eff, q_eff) = pulse.effective_samples();
    let mut u = DMatrix::identity(params.n_levels, params.n_levels);
    for (&i_amp, &q_amp) in i_eff.iter().zip(&q_eff) {
        let step = expm_hermitian(&params.hamiltonian(i_amp, q_amp), pulse.dt);
        u = step * u;
    }
    let prop = Propagator(u);
    let drift = prop.unitarity_error();
    if !(drift <= UNITARITY_TOLERANCE) {
        return Err(Error::Numeric(format!("propagator unitarity drift {drift:e}")));
    }
    Ok(prop)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_pulse_two_levels_is_identity() {
        let params = TransmonParams { n_levels: 2, ..TransmonParams::default() };
        let pulse = PulseSequence::constant(0.0, 0.0, 20, 1.0).unwrap();
        let u = evolve(&pulse, &params).unwrap();
        let err = (u.0 - DMatrix::<C64>::identity(2, 2)).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn zero_pulse_three_levels_idles_computational_block() {
        // Level 2 only picks up the anharmonic phase.
        let params = TransmonParams::default();
        let pulse = PulseSequence::constant(0.0, 0.0, 20, 1.0).unwrap();
        let u = evolve(&pulse, &params).unwrap();
        let block = u.qubit_block();
        let err = (block - DMatrix::<C64>::identity(2, 2)).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
        assert!((u.0[(2, 2)].norm() - 1.0).abs() < 1e-12);
        let phase = C64::from_polar(1.0, params.anharmonicity * 20.0);
        assert!((u.0[(2, 2)] - phase).norm() < 1e-10);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let h = TransmonParams { n_levels: 4, ..Default::default() }.hamiltonian(0.3, -0.7);
        assert!((h.adjoint() - &h).iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn quadrature_drive_rotates_about_y() {
        // Q-only drive on a qubit: |0> -> cos|0> + sin|1> with real amplitudes.
        let params = TransmonParams { n_levels: 2, ..Default::default() };
        let n = 10;
        let q = std::f64::consts::FRAC_PI_2 / (params.drive_scale * n as f64);
        let u = evolve(&PulseSequence::constant(0.0, q, n, 1.0).unwrap(), &params).unwrap();
        let psi = u.apply(&QuantumState::ground(2));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((psi.0[0] - C64::new(s, 0.0)).norm() < 1e-12);
        assert!((psi.0[1] - C64::new(s, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(TransmonParams::from_mhz(1, 320.0, 25.0).is_err());
        assert!(TransmonParams::from_mhz(5, 320.0, 25.0).is_err());
        assert!(TransmonParams::from_mhz(3, -1.0, 25.0).is_err());
        assert!(TransmonParams::from_mhz(3, 320.0, 0.0).is_err());
        let p = TransmonParams::from_mhz(3, 320.0, 25.0).unwrap();
        assert_eq!(p, TransmonParams::default());
    }
}

//! Unitary simulation of a driven multi-level transmon: Hann-window pulse
//! synthesis, piecewise-constant time evolution, population readout with shot
//! noise, gate fidelity and Clifford randomized benchmarking.

pub mod clifford;
mod evolve;
mod fidelity;
mod measure;
mod pulse;
pub mod rb;

pub use clifford::{CliffordGroup, Generator};
pub use evolve::{
    evolve, expm_hermitian, mhz_to_rad_per_ns, Propagator, QuantumState, TransmonParams, C64, UNITARITY_TOLERANCE,
};
pub use fidelity::{
    average_gate_fidelity, interleaved_gate_fidelity, rotation, x90, x_rotation, y90, y_rotation, z_rotation,
    InterleavedEstimate,
};
pub use measure::{measure_population, Populations, Shots};
pub use pulse::{hann_waveform, HannPulseParams, PulseSequence, HANN_TERMS};
pub use rb::{fit_rb_decay, run_rb, run_rb_sampled, RbConfig, RbData, RbFitResult, TUNEUP_RB_LENGTHS};

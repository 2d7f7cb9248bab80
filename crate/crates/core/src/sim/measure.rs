//! Projective population readout with optional shot noise.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::evolve::QuantumState;
use crate::error::{invalid, Error, Result};

/// Measurement mode: exact populations or a finite number of shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "u64", into = "u64")]
pub enum Shots {
    Exact,
    Finite(u64),
}

impl From<u64> for Shots {
    /// `0` means exact readout.
    fn from(n: u64) -> Self {
        if n == 0 {
            Shots::Exact
        } else {
            Shots::Finite(n)
        }
    }
}

impl From<Shots> for u64 {
    fn from(s: Shots) -> Self {
        match s {
            Shots::Exact => 0,
            Shots::Finite(n) => n,
        }
    }
}

/// Estimated level populations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations {
    pub ground: f64,
    pub excited: f64,
    /// Everything above level 1.
    pub leakage: f64,
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Draws level counts from a multinomial over the state's populations.
fn sample_counts<R: Rng + ?Sized>(pops: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    let mut counts = Vec::with_capacity(pops.len());
    let mut remaining = shots;
    let mut mass_left = 1.0;
    for (k, &p) in pops.iter().enumerate() {
        if k + 1 == pops.len() {
            counts.push(remaining);
            break;
        }
        let cond = if mass_left > 0.0 { clamp_prob(p / mass_left) } else { 0.0 };
        let n =
            Binomial::new(remaining, cond).map_err(|e| Error::Numeric(format!("binomial sampling: {e}")))?.sample(rng);
        counts.push(n);
        remaining -= n;
        mass_left -= p;
    }
    Ok(counts)
}

/// Reads out the state. Exact mode returns `|⟨n|ψ⟩|²`; shot mode returns
/// observed frequencies.
pub fn measure_population<R: Rng + ?Sized>(state: &QuantumState, shots: Shots, rng: &mut R) -> Result<Populations> {
    let mut pops = state.populations();
    let total: f64 = pops.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("state is not normalized (norm² = {total})")));
    }
    pops.iter_mut().for_each(|p| *p /= total);
    let exact = Populations {
        ground: pops[0],
        excited: pops.get(1).copied().unwrap_or(0.0),
        leakage: pops.iter().skip(2).sum(),
    };
    match shots {
        Shots::Exact => Ok(exact),
        Shots::Finite(0) => Err(invalid("shot count must be >= 1")),
        Shots::Finite(n) => {
            let counts = sample_counts(&pops, n, rng)?;
            let nf = n as f64;
            Ok(Populations {
                ground: counts[0] as f64 / nf,
                excited: counts.get(1).copied().unwrap_or(0) as f64 / nf,
                leakage: counts.iter().skip(2).sum::<u64>() as f64 / nf,
            })
        }
    }
}

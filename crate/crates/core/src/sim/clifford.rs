//! The 24-element single-qubit Clifford group over the native gate set
//! `{I, X90, X180, X−90, Y90, Y−90}`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;

use super::evolve::C64;
use super::fidelity::{x_rotation, y_rotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    Idle,
    X90,
    X180,
    XMinus90,
    Y90,
    YMinus90,
}

impl Generator {
    pub const ALL: [Generator; 6] =
        [Generator::Idle, Generator::X90, Generator::X180, Generator::XMinus90, Generator::Y90, Generator::YMinus90];

    /// Ideal 2×2 unitary.
    pub fn ideal(self) -> DMatrix<C64> {
        match self {
            Generator::Idle => DMatrix::identity(2, 2),
            Generator::X90 => x_rotation(FRAC_PI_2),
            Generator::X180 => x_rotation(PI),
            Generator::XMinus90 => x_rotation(-FRAC_PI_2),
            Generator::Y90 => y_rotation(FRAC_PI_2),
            Generator::YMinus90 => y_rotation(-FRAC_PI_2),
        }
    }
}

/// One group element: its ideal unitary and a shortest generator word
/// (applied left to right in time).
#[derive(Debug, Clone)]
pub struct Clifford {
    pub ideal: DMatrix<C64>,
    pub word: Vec<Generator>,
}

/// `|Tr(A†B)| = 2` for 2×2 unitaries equal up to a global phase.
pub fn equal_up_to_phase(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
    ((a.adjoint() * b).trace().norm() - 2.0).abs() < tol
}

const PHASE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CliffordGroup {
    elements: Vec<Clifford>,
    /// `compose[a][b]`: index of "apply `a`, then `b`".
    compose: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
    x90: usize,
}

fn word_unitary(word: &[Generator]) -> DMatrix<C64> {
    word.iter().fold(DMatrix::identity(2, 2), |acc, g| g.ideal() * acc)
}

impl CliffordGroup {
    /// Breadth-first search over generator words, keeping the first word that
    /// reaches each new element.
    pub fn new() -> Result<Self> {
        let moves = [Generator::X90, Generator::Y90, Generator::X180, Generator::XMinus90, Generator::YMinus90];
        let mut elements = vec![Clifford { ideal: DMatrix::identity(2, 2), word: vec![Generator::Idle] }];
        let mut frontier: Vec<Vec<Generator>> = vec![Vec::new()];
        while elements.len() < 24 {
            let mut next = Vec::new();
            for word in &frontier {
                for &g in &moves {
                    let mut w = word.clone();
                    w.push(g);
                    let u = word_unitary(&w);
                    if !elements.iter().any(|c| equal_up_to_phase(&c.ideal, &u, PHASE_TOL)) {
                        elements.push(Clifford { ideal: u, word: w.clone() });
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                return Err(Error::Invariant(format!("generator set closed at {} elements", elements.len())));
            }
            frontier = next;
        }

        let find = |u: &DMatrix<C64>| elements.iter().position(|c| equal_up_to_phase(&c.ideal, u, PHASE_TOL));
        let n = elements.len();
        let mut compose = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                let prod = &elements[b].ideal * &elements[a].ideal;
                compose[a][b] = find(&prod)
                    .ok_or_else(|| Error::Invariant(format!("product of Cliffords {a}, {b} not in group")))?;
            }
        }
        let identity = 0;
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            inverse[a] = (0..n)
                .find(|&b| compose[a][b] == identity)
                .ok_or_else(|| Error::Invariant(format!("Clifford {a} has no inverse")))?;
        }
        let x90 = find(&Generator::X90.ideal()).ok_or_else(|| Error::Invariant("X90 not in group".into()))?;
        Ok(Self { elements, compose, inverse, identity, x90 })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Clifford] {
        &self.elements
    }

    pub fn get(&self, index: usize) -> &Clifford {
        &self.elements[index]
    }

    /// Index of "apply `first`, then `second`".
    pub fn then(&self, first: usize, second: usize) -> usize {
        self.compose[first][second]
    }

    pub fn inverse(&self, index: usize) -> usize {
        self.inverse[index]
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn x90_index(&self) -> usize {
        self.x90
    }

    /// Mean number of native gates per Clifford, idle counted as one.
    pub fn mean_word_length(&self) -> f64 {
        self.elements.iter().map(|c| c.word.len()).sum::<usize>() as f64 / self.len() as f64
    }
}

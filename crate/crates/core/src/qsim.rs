//! Statevector gate engine: gate programs, state preparation, sampling and
//! threshold mitigation.
//!
//! Gates act matrix-free on amplitude pairs; nothing larger than a 2x2 block
//! is ever materialized during application. Qubit 0 is the most significant
//! bit of the basis index, consistent with the tensor module.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{apply_single_qubit, StateVector};

/// A single gate of a [`GateProgram`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    /// Real rotation `exp(-i θ Y / 2)`.
    Ry(usize, f64),
    /// The Y-diagonalizing rotation `(1/√2) [[-1, -i], [i, 1]]`.
    N(usize),
    Cnot { control: usize, target: usize },
    Swap(usize, usize),
}

impl Gate {
    fn check(&self, n: usize) -> Result<()> {
        let bad = |qubit: usize| Error::BadTarget { qubit, n };
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::Ry(q, _) | Gate::N(q) => {
                if q >= n {
                    return Err(bad(q));
                }
            }
            Gate::Cnot { control: a, target: b } | Gate::Swap(a, b) => {
                if a >= n {
                    return Err(bad(a));
                }
                if b >= n {
                    return Err(bad(b));
                }
                if a == b {
                    return Err(bad(b));
                }
            }
        }
        Ok(())
    }

    /// The inverse gate. Everything except `Ry` is an involution.
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Ry(q, theta) => Gate::Ry(q, -theta),
            g => g,
        }
    }
}

/// An ordered list of gates; earlier gates act on the state first.
pub type GateProgram = Vec<Gate>;

/// Reverses a program and inverts each gate.
pub fn program_inverse(program: &[Gate]) -> GateProgram {
    program.iter().rev().map(|g| g.inverse()).collect()
}

/// Applies one gate in place.
pub fn apply_gate(amps: &mut [C64], n: usize, gate: &Gate) -> Result<()> {
    gate.check(n)?;
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let s = 1.0 / f64::sqrt(2.0);
    match *gate {
        Gate::H(q) => apply_single_qubit(amps, n, q, &[[s * l, s * l], [s * l, -s * l]]),
        Gate::X(q) => apply_single_qubit(amps, n, q, &[[o, l], [l, o]]),
        Gate::Y(q) => apply_single_qubit(amps, n, q, &[[o, -i], [i, o]]),
        Gate::Z(q) => apply_single_qubit(amps, n, q, &[[l, o], [o, -l]]),
        Gate::Ry(q, theta) => {
            let (c, sn) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            apply_single_qubit(amps, n, q, &[[c * l, -sn * l], [sn * l, c * l]])
        }
        Gate::N(q) => apply_single_qubit(amps, n, q, &[[-s * l, -s * i], [s * i, s * l]]),
        Gate::Cnot { control, target } => {
            let cm = 1usize << (n - 1 - control);
            let tm = 1usize << (n - 1 - target);
            for idx in 0..amps.len() {
                if idx & cm != 0 && idx & tm == 0 {
                    amps.swap(idx, idx | tm);
                }
            }
        }
        Gate::Swap(a, b) => {
            let am = 1usize << (n - 1 - a);
            let bm = 1usize << (n - 1 - b);
            for idx in 0..amps.len() {
                if idx & am != 0 && idx & bm == 0 {
                    amps.swap(idx, (idx & !am) | bm);
                }
            }
        }
    }
    Ok(())
}

/// Applies a gate program to a state, returning the rotated state.
pub fn apply_program(state: &StateVector, program: &[Gate]) -> Result<StateVector> {
    let mut out = state.clone();
    apply_program_in_place(&mut out, program)?;
    Ok(out)
}

/// In-place variant of [`apply_program`].
pub fn apply_program_in_place(state: &mut StateVector, program: &[Gate]) -> Result<()> {
    for g in program {
        apply_gate(&mut state.amps, state.n, g)?;
    }
    Ok(())
}

/// Prepares the uniform top-load force state `X^{⊗n_y} ⊗ H^{⊗n_x} ⊗ X |0⟩`.
///
/// The amplitudes are `2^{-n_x/2}` exactly on the basis states with all y-bits
/// set and d = 1 (vertical traction on the top edge).
pub fn prepare_force_state(n_x: usize, n_y: usize) -> StateVector {
    let n = n_x + n_y + 1;
    let mut state = StateVector::zero(n);
    let mut program: GateProgram = (0..n_y).map(Gate::X).collect();
    program.extend((n_y..n_y + n_x).map(Gate::H));
    program.push(Gate::X(n - 1));
    apply_program_in_place(&mut state, &program).expect("targets in range by construction");
    state
}

/// Shot budget: analytic expectations or a finite seeded sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Shots {
    Exact,
    Count(u64),
}

/// Sampling configuration shared by expectation estimation and raw sampling.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShotConfig {
    pub shots: Shots,
    pub seed: u64,
    /// Probabilities below this cutoff are zeroed before evaluation.
    pub mitigation_threshold: Option<f64>,
}

impl ShotConfig {
    pub fn exact() -> Self {
        Self { shots: Shots::Exact, seed: 0, mitigation_threshold: None }
    }

    pub fn shots(count: u64, seed: u64) -> Self {
        Self { shots: Shots::Count(count), seed, mitigation_threshold: None }
    }
}

/// Draws seeded multinomial counts from the state's outcome distribution.
pub fn sample(state: &StateVector, shots: u64, seed: u64) -> BTreeMap<usize, u64> {
    let probs: Vec<f64> = state.amps.iter().map(|a| a.norm_sqr()).collect();
    sample_distribution(&probs, shots, seed)
}

/// Multinomial sampling from an explicit probability vector via inverse CDF.
pub fn sample_distribution(probs: &[f64], shots: u64, seed: u64) -> BTreeMap<usize, u64> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..shots {
        let r: f64 = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c < r).min(probs.len() - 1);
        *counts.entry(idx).or_insert(0) += 1;
    }
    counts
}

/// Zeroes probabilities below `tau` and renormalizes the remainder.
pub fn mitigate_threshold(dist: &BTreeMap<usize, f64>, tau: f64) -> Result<BTreeMap<usize, f64>> {
    let mut kept: BTreeMap<usize, f64> = dist
        .iter()
        .filter(|(_, &p)| p >= tau)
        .map(|(&k, &p)| (k, p))
        .collect();
    let total: f64 = kept.values().sum();
    if total <= 0.0 {
        return Err(Error::EmptyDistribution { tau });
    }
    for p in kept.values_mut() {
        *p /= total;
    }
    Ok(kept)
}

//! The temperature-ordered Green function oracle: the sole input of the
//! reconstruction pipeline.
//!
//! An oracle knows a finite list of generators (with star pairing and
//! declared norm bounds), an inverse temperature, and how to evaluate
//! temperature-ordered Green functions on words of generators at imaginary
//! times. Reconstruction consumes nothing else, so it can never peek at an
//! underlying Hamiltonian.
//!
//! Three implementations are provided: the exact finite-system oracle
//! ([`FiniteSystemOracle`]), and quasi-free fermion and boson oracles
//! ([`FermionOracle`], [`BosonOracle`]) that evaluate Wick pairing sums over
//! two-point kernels.

mod finite;
mod quasifree;

pub use finite::{matrix_unit_generators, matrix_unit_generators_with_identity, FiniteSystemOracle};
pub use quasifree::{BosonOracle, FermionOracle};

use crate::error::Result;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// One generator of an oracle: a label, the index of its star partner and a
/// declared norm bound. The bound is `+inf` for unbounded generators such as
/// bosonic fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    pub star: usize,
    pub norm_bound: f64,
}

/// One letter of a formal word: a generator index and an imaginary-time
/// angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Letter {
    pub gen: usize,
    pub tau: f64,
}

impl Letter {
    pub fn new(gen: usize, tau: f64) -> Self {
        Self { gen, tau }
    }
}

/// A formal word `[a_1, tau_1, ..., a_n, tau_n]`.
pub type FormalWord = Vec<Letter>;

/// Serializable description of an oracle (labels, star pairing, bounds,
/// inverse temperature); this is what reports and configs carry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleDescriptor {
    pub beta: f64,
    pub generators: Vec<Generator>,
}

/// Evaluator of temperature-ordered Green functions on formal words.
///
/// `eval` must satisfy `eval([]) = 1` and is guaranteed meaningful on words
/// whose times are cyclically ordered,
/// `tau_1 <= ... <= tau_n <= tau_1 + beta`. Every implementation in this
/// crate also extends evaluation to arbitrary time tuples: the finite-system
/// oracle by entire analytic continuation of the trace, the quasi-free
/// oracles by the totally (anti-)symmetric extension with an
/// (anti-)periodically wrapped two-point kernel. The extensions are what
/// [`check_cyclic_periodicity`] probes.
///
/// Implementations are immutable after construction and evaluation is pure,
/// so sharing an oracle across threads is safe.
pub trait TogfOracle: Send + Sync {
    fn beta(&self) -> f64;

    fn generators(&self) -> &[Generator];

    fn eval(&self, word: &[Letter]) -> Result<C64>;

    fn descriptor(&self) -> OracleDescriptor {
        OracleDescriptor {
            beta: self.beta(),
            generators: self.generators().to_vec(),
        }
    }

    /// Index of the star partner of generator `g`.
    fn star(&self, g: usize) -> usize {
        self.generators()[g].star
    }
}

/// The star-reversed, `tau -> beta - tau` reflection of a word; appending
/// this to another word produces Gram-matrix and reflection-positivity
/// entries.
pub fn reflect_word(oracle: &dyn TogfOracle, word: &[Letter]) -> FormalWord {
    let beta = oracle.beta();
    word.iter()
        .rev()
        .map(|l| Letter::new(oracle.star(l.gen), beta - l.tau))
        .collect()
}

/// Outcome of the two-point cyclic-shift probe: residuals for the fermionic
/// (`s = -1`) and bosonic (`s = +1`) signs and the sign that fits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicityReport {
    pub antiperiodic_residual: f64,
    pub periodic_residual: f64,
    /// `-1` if the anti-periodic sign fits better, `+1` otherwise.
    pub fitted_sign: i8,
}

/// Shift the first time of the two-point function by `beta` and compare
/// against both signs: reports
/// `max_grid |phi(c, tau_1 + beta, a, tau_2) - s phi(c, tau_1, a, tau_2)|`
/// for `s = -1` and `s = +1`, over all grid pairs `tau_1 < tau_2`.
///
/// This is the two-point shadow of the statistics parameter: quasi-free
/// fermion oracles fit `s = -1`, quasi-free boson oracles `s = +1`.
pub fn check_cyclic_periodicity(
    oracle: &dyn TogfOracle,
    creation: usize,
    annihilation: usize,
    tau_grid: &[f64],
) -> Result<PeriodicityReport> {
    let beta = oracle.beta();
    let mut fermi = 0.0f64;
    let mut bose = 0.0f64;
    for (i, &tau1) in tau_grid.iter().enumerate() {
        for &tau2 in &tau_grid[i + 1..] {
            if tau2 <= tau1 {
                continue;
            }
            let base = oracle.eval(&[
                Letter::new(creation, tau1),
                Letter::new(annihilation, tau2),
            ])?;
            let shifted = oracle.eval(&[
                Letter::new(creation, tau1 + beta),
                Letter::new(annihilation, tau2),
            ])?;
            fermi = fermi.max((shifted + base).norm());
            bose = bose.max((shifted - base).norm());
        }
    }
    Ok(PeriodicityReport {
        antiperiodic_residual: fermi,
        periodic_residual: bose,
        fitted_sign: if fermi <= bose { -1 } else { 1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::ThermalSystem;

    #[test]
    fn reflection_is_an_involution() {
        let sys = ThermalSystem::qubit(1.0, 1.0);
        let gens = crate::oracle::finite::matrix_unit_generators(2);
        let oracle = FiniteSystemOracle::new(sys, gens).unwrap();
        let word = vec![Letter::new(1, 0.1), Letter::new(2, 0.3)];
        let double = reflect_word(&oracle, &reflect_word(&oracle, &word));
        for (a, b) in word.iter().zip(double.iter()) {
            assert_eq!(a.gen, b.gen);
            assert!((a.tau - b.tau).abs() < 1e-15);
        }
    }
}

//! Quasi-free (Gaussian) oracles for free fermions and bosons.
//!
//! Words of creation and annihilation operators evaluate through Wick's
//! theorem: a sum over pair partitions of two-point kernels, with the
//! permutation sign of the pairing for fermions and no sign for bosons.
//!
//! Evaluation is defined for arbitrary time tuples, not only cyclically
//! ordered ones: letters are stable-sorted by time (fermions pick up the
//! sorting parity, matching the total antisymmetry of fermionic Green
//! functions) and the two-point kernel wraps time separations larger than
//! `beta` back into `[0, beta]` with the statistics sign. The two-point
//! function is therefore anti-periodic under `tau -> tau + beta` for
//! fermions and periodic for bosons.

use super::{Generator, Letter, TogfOracle};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::system::{Observable, ThermalSystem};
use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Statistics {
    Fermi,
    Bose,
}

impl Statistics {
    fn sign(self) -> f64 {
        match self {
            Statistics::Fermi => -1.0,
            Statistics::Bose => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SortedLetter {
    mode: usize,
    creator: bool,
    tau: f64,
}

/// Shared Wick evaluation engine over per-mode `(energy, occupation)` data.
struct WickEngine {
    stat: Statistics,
    beta: f64,
    energies: Vec<f64>,
    occupations: Vec<f64>,
}

impl WickEngine {
    /// Two-point kernel for a pair at non-negative time separation
    /// `u = tau_j - tau_i` (position `i` before `j` in the sorted word).
    /// Separations beyond `beta` wrap back with the statistics sign.
    fn kernel(&self, a: &SortedLetter, b: &SortedLetter) -> C64 {
        if a.mode != b.mode || a.creator == b.creator {
            return C64::new(0.0, 0.0);
        }
        let mut u = b.tau - a.tau;
        let mut sign = 1.0;
        let slack = 1e-12 * self.beta.max(1.0);
        while u > self.beta + slack {
            u -= self.beta;
            sign *= self.stat.sign();
        }
        let eps = self.energies[a.mode];
        let n = self.occupations[a.mode];
        let value = if a.creator {
            // <a*(tau_i) a(tau_j)> = n e^{eps u}
            n * (eps * u).exp()
        } else {
            // <a(tau_i) a*(tau_j)> = (1 - n) e^{-eps u} fermionic,
            //                        (1 + n) e^{-eps u} bosonic
            let weight = match self.stat {
                Statistics::Fermi => 1.0 - n,
                Statistics::Bose => 1.0 + n,
            };
            weight * (-eps * u).exp()
        };
        C64::new(sign * value, 0.0)
    }

    /// Recursive pairing expansion: contract the first letter against every
    /// partner, with the crossing sign for fermions.
    fn pairing_sum(&self, letters: &[SortedLetter]) -> C64 {
        if letters.is_empty() {
            return C64::new(1.0, 0.0);
        }
        if letters.len() % 2 == 1 {
            return C64::new(0.0, 0.0);
        }
        let mut total = C64::new(0.0, 0.0);
        for p in 1..letters.len() {
            let k = self.kernel(&letters[0], &letters[p]);
            if k.norm_sqr() == 0.0 {
                continue;
            }
            let crossing = match self.stat {
                Statistics::Fermi => {
                    if p % 2 == 0 {
                        -1.0
                    } else {
                        1.0
                    }
                }
                Statistics::Bose => 1.0,
            };
            let rest: Vec<SortedLetter> = letters[1..p]
                .iter()
                .chain(&letters[p + 1..])
                .cloned()
                .collect();
            total += k * crossing * self.pairing_sum(&rest);
        }
        total
    }

    fn eval(&self, letters: Vec<SortedLetter>) -> C64 {
        if letters.len() % 2 == 1 {
            return C64::new(0.0, 0.0);
        }
        // Stable insertion sort by tau; for fermions each adjacent swap
        // contributes a factor -1 (total antisymmetry of the Green
        // functions in their (a_i, tau_i) arguments).
        let mut sorted = letters;
        let mut sign = 1.0;
        for i in 1..sorted.len() {
            let mut j = i;
            while j > 0 && sorted[j - 1].tau > sorted[j].tau {
                sorted.swap(j - 1, j);
                sign *= self.stat.sign();
                j -= 1;
            }
        }
        self.pairing_sum(&sorted) * sign
    }
}

fn fermi_occupation(beta: f64, eps: f64) -> f64 {
    let x = beta * eps;
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

fn bose_occupation(beta: f64, omega: f64) -> f64 {
    1.0 / ((beta * omega).exp_m1())
}

fn ladder_generators(modes: usize, symbol: &str, bound: f64) -> Vec<Generator> {
    let mut gens = Vec::with_capacity(2 * modes);
    for k in 0..modes {
        gens.push(Generator {
            label: format!("{symbol}_{k}"),
            star: modes + k,
            norm_bound: bound,
        });
    }
    for k in 0..modes {
        gens.push(Generator {
            label: format!("{symbol}*_{k}"),
            star: k,
            norm_bound: bound,
        });
    }
    gens
}

/// Quasi-free fermion oracle for modes with energies `eps_k`.
///
/// Generators `0..M` are the annihilators `psi_k`, generators `M..2M` the
/// creators `psi*_k`; all have norm bound one.
pub struct FermionOracle {
    engine: WickEngine,
    info: Vec<Generator>,
}

impl FermionOracle {
    pub fn new(energies: Vec<f64>, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        let occupations = energies.iter().map(|&e| fermi_occupation(beta, e)).collect();
        let info = ladder_generators(energies.len(), "psi", 1.0);
        Ok(Self {
            engine: WickEngine {
                stat: Statistics::Fermi,
                beta,
                energies,
                occupations,
            },
            info,
        })
    }

    pub fn modes(&self) -> usize {
        self.engine.energies.len()
    }

    /// Generator index of the annihilator for `mode`.
    pub fn annihilator(&self, mode: usize) -> usize {
        mode
    }

    /// Generator index of the creator for `mode`.
    pub fn creator(&self, mode: usize) -> usize {
        self.modes() + mode
    }

    fn letters(&self, word: &[Letter]) -> Vec<SortedLetter> {
        let m = self.modes();
        word.iter()
            .map(|l| SortedLetter {
                mode: l.gen % m,
                creator: l.gen >= m,
                tau: l.tau,
            })
            .collect()
    }
}

impl TogfOracle for FermionOracle {
    fn beta(&self) -> f64 {
        self.engine.beta
    }

    fn generators(&self) -> &[Generator] {
        &self.info
    }

    fn eval(&self, word: &[Letter]) -> Result<C64> {
        Ok(self.engine.eval(self.letters(word)))
    }
}

/// Quasi-free boson oracle for modes with frequencies `omega_k > 0`.
///
/// Generators `0..M` are the annihilators `phi_k`, generators `M..2M` the
/// creators `phi*_k`. The fields are unbounded, so the declared norm bounds
/// are infinite and the oracle satisfies (P1)-(P4) but not the C*-norm
/// bound; it is admissible for Hilbert-space/Liouvillian reconstruction but
/// its represented operators carry no norm contract.
///
/// Construction cross-checks the Wick evaluation of every mode against an
/// exact Fock-space computation truncated at occupation `n_trunc`.
pub struct BosonOracle {
    engine: WickEngine,
    info: Vec<Generator>,
    n_trunc: usize,
}

impl BosonOracle {
    pub fn new(frequencies: Vec<f64>, beta: f64, n_trunc: usize) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        if frequencies.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Config(
                "all boson frequencies must be positive for the thermal Gaussian state to exist"
                    .into(),
            ));
        }
        if n_trunc < 2 {
            return Err(Error::Config("n_trunc must be at least 2".into()));
        }
        let occupations = frequencies.iter().map(|&w| bose_occupation(beta, w)).collect();
        let info = ladder_generators(frequencies.len(), "phi", f64::INFINITY);
        let oracle = Self {
            engine: WickEngine {
                stat: Statistics::Bose,
                beta,
                energies: frequencies,
                occupations,
            },
            info,
            n_trunc,
        };
        let defect = oracle.truncated_fock_defect()?;
        if defect > 1e-6 {
            return Err(Error::Truncation(defect));
        }
        Ok(oracle)
    }

    pub fn modes(&self) -> usize {
        self.engine.energies.len()
    }

    pub fn annihilator(&self, mode: usize) -> usize {
        mode
    }

    pub fn creator(&self, mode: usize) -> usize {
        self.modes() + mode
    }

    fn letters(&self, word: &[Letter]) -> Vec<SortedLetter> {
        let m = self.modes();
        word.iter()
            .map(|l| SortedLetter {
                mode: l.gen % m,
                creator: l.gen >= m,
                tau: l.tau,
            })
            .collect()
    }

    /// Largest disagreement between the Wick evaluation and a Fock-space
    /// trace truncated at `n_trunc` quanta, over a fixed two- and
    /// four-letter probe per mode.
    pub fn truncated_fock_defect(&self) -> Result<f64> {
        let beta = self.engine.beta;
        let dim = self.n_trunc + 1;
        let mut worst = 0.0f64;
        for (k, &w) in self.engine.energies.iter().enumerate() {
            let h = CMat::from_fn(dim, dim, |i, j| {
                if i == j {
                    C64::new(w * i as f64, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let mut lower = CMat::zeros(dim, dim);
            for nq in 1..dim {
                lower[(nq - 1, nq)] = C64::new((nq as f64).sqrt(), 0.0);
            }
            let sys = ThermalSystem::new(h, vec![], vec![], beta)?;
            let b = Observable::new("b", lower.clone())?;
            let bdag = Observable::new("b*", lower.adjoint())?;

            let (a, c) = (self.annihilator(k), self.creator(k));
            let probes: [&[(usize, f64)]; 2] = [
                &[(c, 0.2 * beta), (a, 0.6 * beta)],
                &[(c, 0.1 * beta), (c, 0.3 * beta), (a, 0.5 * beta), (a, 0.8 * beta)],
            ];
            for probe in probes {
                let word: Vec<Letter> = probe.iter().map(|&(g, t)| Letter::new(g, t)).collect();
                let wick = self.engine.eval(self.letters(&word));
                let obs_word: Vec<(&Observable, f64)> = probe
                    .iter()
                    .map(|&(g, t)| (if g == c { &bdag } else { &b }, t))
                    .collect();
                let fock = sys.togf(&obs_word)?;
                worst = worst.max((wick - fock).norm());
            }
        }
        Ok(worst)
    }
}

impl TogfOracle for BosonOracle {
    fn beta(&self) -> f64 {
        self.engine.beta
    }

    fn generators(&self) -> &[Generator] {
        &self.info
    }

    fn eval(&self, word: &[Letter]) -> Result<C64> {
        Ok(self.engine.eval(self.letters(word)))
    }
}

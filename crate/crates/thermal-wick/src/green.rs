//! Structural checks on thermal Green functions: the cyclic KMS identity,
//! translation invariance, the reflection-positivity matrix and sampled
//! tube-domain bounds.
//!
//! Everything here returns residuals; the acceptance suite and the CLI
//! compare them against tolerances.

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermitian_part, hermiticity_defect, CMat};
use crate::oracle::{reflect_word, FormalWord, Letter, TogfOracle};
use crate::system::{check_cyclic_order, Observable, ThermalSystem};
use num_complex::Complex64 as C64;

/// Relative eigenvalue tolerance under which a reflection-positivity matrix
/// counts as positive semi-definite. Gram matrices of smooth kernels are
/// severely ill-conditioned, so tiny negative eigenvalues are noise.
pub const PI_PSD_RTOL: f64 = 1e-9;

/// `|phi(a_1,tau_1,...,a_n,tau_n)
///   - phi(a_{j+1},tau_{j+1},...,a_n,tau_n,a_1,tau_1+beta,...,a_j,tau_j+beta)|`
/// for a cyclically ordered word and a split index `1 <= j <= n-1`.
pub fn cyclic_kms_residual(oracle: &dyn TogfOracle, word: &[Letter], j: usize) -> Result<f64> {
    let n = word.len();
    if n < 2 || j == 0 || j >= n {
        return Err(Error::OrderViolation(format!(
            "split index must satisfy 1 <= j <= n-1, got j = {j} for a word of length {n}"
        )));
    }
    check_cyclic_order(word.iter().map(|l| l.tau), oracle.beta())?;
    let lhs = oracle.eval(word)?;
    let beta = oracle.beta();
    let mut rotated: FormalWord = word[j..].to_vec();
    rotated.extend(word[..j].iter().map(|l| Letter::new(l.gen, l.tau + beta)));
    let rhs = oracle.eval(&rotated)?;
    Ok((lhs - rhs).norm())
}

/// `|phi(word) - phi(word shifted by tau_shift)|`.
pub fn translation_residual(
    oracle: &dyn TogfOracle,
    word: &[Letter],
    tau_shift: f64,
) -> Result<f64> {
    let base = oracle.eval(word)?;
    let shifted: FormalWord = word
        .iter()
        .map(|l| Letter::new(l.gen, l.tau + tau_shift))
        .collect();
    let moved = oracle.eval(&shifted)?;
    Ok((base - moved).norm())
}

/// The reflection-positivity matrix of a family of half-words.
#[derive(Debug, Clone)]
pub struct PiMatrix {
    pub entries: CMat,
    pub half_words: Vec<FormalWord>,
}

impl PiMatrix {
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.entries).values.iter().cloned().collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().cloned().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().cloned().unwrap_or(0.0)
    }

    /// Positive semi-definite within the relative tolerance
    /// `min_eig >= -rtol * max(1, max_eig)`.
    pub fn is_psd_within(&self, rtol: f64) -> bool {
        self.min_eigenvalue() >= -rtol * self.max_eigenvalue().max(1.0)
    }
}

/// Build `Pi_ij = phi(word_i ++ reflect(word_j))`, the matrix that
/// reflection positivity asserts to be positive semi-definite.
///
/// Every half-word must have strictly increasing times inside
/// `(0, beta/2)`; the empty half-word is allowed and contributes a diagonal
/// entry of one.
pub fn build_pi_matrix(oracle: &dyn TogfOracle, half_words: &[FormalWord]) -> Result<PiMatrix> {
    let beta = oracle.beta();
    for word in half_words {
        let mut last = 0.0f64;
        for l in word {
            if l.tau <= last + 1e-12 || l.tau >= beta / 2.0 - 1e-12 {
                return Err(Error::ReflectionRange(format!(
                    "tau = {} not strictly inside (0, beta/2) in increasing order",
                    l.tau
                )));
            }
            last = l.tau;
        }
    }
    let n = half_words.len();
    let mut entries = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut word = half_words[i].clone();
            word.extend(reflect_word(oracle, &half_words[j]));
            entries[(i, j)] = oracle.eval(&word)?;
        }
    }
    let defect = hermiticity_defect(&entries);
    if defect > 1e-10 {
        return Err(Error::OraclePsdViolation(format!(
            "Pi matrix deviates from Hermitian by relative {defect:.3e}"
        )));
    }
    Ok(PiMatrix {
        entries: hermitian_part(&entries),
        half_words: half_words.to_vec(),
    })
}

/// Sample the tube bound `|F_beta(a_1,z_1,...,a_n,z_n)| <= prod_j ||a_j||`:
/// returns the largest excess `|F| - prod ||a_j||` over the samples.
///
/// Every sample must lie in the closed tube
/// `Im z_1 <= ... <= Im z_n <= Im z_1 + beta` (within `1e-12`), otherwise
/// the check aborts with [`Error::TubeViolation`].
pub fn tube_bound_check(
    sys: &ThermalSystem,
    word: &[&Observable],
    samples: &[Vec<C64>],
) -> Result<f64> {
    let bound: f64 = word.iter().map(|a| a.norm()).product();
    let mut excess = f64::NEG_INFINITY;
    for sample in samples {
        if sample.len() != word.len() {
            return Err(Error::Config(format!(
                "sample has {} times for {} observables",
                sample.len(),
                word.len()
            )));
        }
        let z_word: Vec<(&Observable, C64)> =
            word.iter().zip(sample.iter()).map(|(&a, &z)| (a, z)).collect();
        let value = sys.green_function(&z_word)?;
        excess = excess.max(value.norm() - bound);
    }
    Ok(excess)
}

/// Deterministic low-discrepancy samples in the closed tube
/// `Im z_1 <= ... <= Im z_n <= Im z_1 + beta`: interior points from a Halton
/// sequence plus points on every boundary face (coincident neighbouring
/// imaginary parts, and the wrap face `Im z_n = Im z_1 + beta`).
pub fn sample_tube(n: usize, beta: f64, count: usize, t_scale: f64) -> Vec<Vec<C64>> {
    fn halton(index: usize, base: usize) -> f64 {
        let mut f = 1.0;
        let mut r = 0.0;
        let mut i = index + 1;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    }
    const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    let mut samples = Vec::with_capacity(count);
    let faces = n + 1;
    for k in 0..count {
        // Real parts.
        let re: Vec<f64> = (0..n)
            .map(|d| (2.0 * halton(k, PRIMES[d % 8]) - 1.0) * t_scale)
            .collect();
        // Sorted imaginary parts inside [0, beta].
        let mut im: Vec<f64> = (0..n)
            .map(|d| halton(k, PRIMES[(d + n) % 8]) * beta)
            .collect();
        im.sort_by(f64::total_cmp);
        // Cycle through the boundary faces.
        match k % faces {
            0 => {} // interior (generically)
            f if f < n => {
                // Coincident face Im z_f = Im z_{f-1}.
                im[f] = im[f - 1];
            }
            _ => {
                // Wrap face Im z_n = Im z_1 + beta.
                if n > 1 {
                    im[n - 1] = im[0] + beta;
                } else {
                    im[0] = beta;
                }
            }
        }
        samples.push(
            re.iter()
                .zip(im.iter())
                .map(|(&r, &i)| C64::new(r, i))
                .collect(),
        );
    }
    samples
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{matrix_unit_generators, FiniteSystemOracle};

    fn qubit_oracle() -> FiniteSystemOracle {
        let sys = ThermalSystem::qubit(1.0, 1.0);
        FiniteSystemOracle::new(sys, matrix_unit_generators(2)).unwrap()
    }

    #[test]
    fn cyclic_kms_rejects_single_letters() {
        let oracle = qubit_oracle();
        let word = [Letter::new(1, 0.3)];
        assert!(matches!(
            cyclic_kms_residual(&oracle, &word, 1),
            Err(Error::OrderViolation(_))
        ));
    }

    #[test]
    fn cyclic_kms_residual_is_tiny_for_exact_oracle() {
        let oracle = qubit_oracle();
        let word = [
            Letter::new(1, 0.1),
            Letter::new(2, 0.35),
            Letter::new(0, 0.7),
        ];
        for j in 1..3 {
            let r = cyclic_kms_residual(&oracle, &word, j).unwrap();
            assert!(r < 1e-12, "j={j}: {r}");
        }
    }

    #[test]
    fn identity_word_has_zero_cyclic_residual() {
        let sys = ThermalSystem::qubit(1.0, 1.0);
        let oracle =
            FiniteSystemOracle::new(sys, vec![Observable::identity(2)]).unwrap();
        let word = [Letter::new(0, 0.1), Letter::new(0, 0.5)];
        assert!(cyclic_kms_residual(&oracle, &word, 1).unwrap() < 1e-14);
    }

    #[test]
    fn translation_residual_vanishes() {
        let oracle = qubit_oracle();
        let word = [Letter::new(1, 0.2), Letter::new(2, 0.6)];
        assert_eq!(translation_residual(&oracle, &word, 0.0).unwrap(), 0.0);
        let r = oracle.beta() / 7.0;
        assert!(translation_residual(&oracle, &word, r).unwrap() < 1e-12);
        assert!(translation_residual(&oracle, &[], 0.4).unwrap() == 0.0);
    }

    #[test]
    fn pi_matrix_single_half_word_in_unit_interval() {
        let oracle = qubit_oracle();
        // e01 has operator norm one.
        let half = vec![vec![Letter::new(1, 0.2)]];
        let pi = build_pi_matrix(&oracle, &half).unwrap();
        let v = pi.entries[(0, 0)];
        assert!(v.im.abs() < 1e-14);
        assert!(v.re >= 0.0 && v.re <= 1.0);
    }

    #[test]
    fn pi_matrix_empty_half_word_gives_unit_diagonal() {
        let oracle = qubit_oracle();
        let half = vec![vec![], vec![Letter::new(1, 0.15)]];
        let pi = build_pi_matrix(&oracle, &half).unwrap();
        assert!((pi.entries[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(pi.is_psd_within(1e-10));
    }

    #[test]
    fn pi_matrix_rejects_out_of_range_times() {
        let oracle = qubit_oracle();
        let half = vec![vec![Letter::new(1, 0.7)]]; // beta/2 = 0.5
        assert!(matches!(
            build_pi_matrix(&oracle, &half),
            Err(Error::ReflectionRange(_))
        ));
    }

    #[test]
    fn tube_bound_holds_on_real_samples() {
        let sys = ThermalSystem::qubit(1.0, 1.0);
        let gens = matrix_unit_generators(2);
        let word = [&gens[1], &gens[2]];
        let samples: Vec<Vec<C64>> = (0..10)
            .map(|k| vec![C64::new(0.3 * k as f64, 0.0), C64::new(-0.1 * k as f64, 0.0)])
            .collect();
        let excess = tube_bound_check(&sys, &word, &samples).unwrap();
        assert!(excess <= 1e-12, "{excess}");
    }

    #[test]
    fn tube_bound_unitary_one_letter() {
        let sys = ThermalSystem::qubit(1.0, 1.0);
        let sx = Observable::new(
            "sx",
            CMat::from_fn(2, 2, |i, j| {
                if i != j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        )
        .unwrap();
        let samples: Vec<Vec<C64>> = (0..8)
            .map(|k| vec![C64::new(0.0, 0.125 * k as f64)])
            .collect();
        let excess = tube_bound_check(&sys, &[&sx], &samples).unwrap();
        assert!(excess <= 1e-12);
    }

    #[test]
    fn tube_violation_is_reported() {
        let sys = ThermalSystem::qubit(1.0, 1.0);
        let gens = matrix_unit_generators(2);
        let word = [&gens[1], &gens[2]];
        let samples = vec![vec![C64::new(0.0, 0.5), C64::new(0.0, 0.1)]];
        assert!(matches!(
            tube_bound_check(&sys, &word, &samples),
            Err(Error::TubeViolation(_))
        ));
    }

    #[test]
    fn sampled_tube_points_are_admissible() {
        for n in 1..=3 {
            let samples = sample_tube(n, 0.9, 50, 2.0);
            assert_eq!(samples.len(), 50);
            for s in &samples {
                for w in s.windows(2) {
                    assert!(w[1].im >= w[0].im - 1e-15);
                }
                assert!(s[n - 1].im <= s[0].im + 0.9 + 1e-15);
            }
        }
    }

    #[test]
    fn null_vectors_stay_null_under_appending() {
        // [a, tau, b, tau] - [ab, tau] lies in the kernel of the Gram form
        // (coincident-time multiplicativity); appending a generator keeps
        // it there. Matrix units multiply as e01 e10 = e00.
        let oracle = qubit_oracle();
        let norm2 = |w1: &[Letter], w2: &[Letter]| -> f64 {
            let words = [w1.to_vec(), w2.to_vec()];
            let coeffs = [C64::new(1.0, 0.0), C64::new(-1.0, 0.0)];
            let mut acc = C64::new(0.0, 0.0);
            for (wi, ci) in words.iter().zip(coeffs.iter()) {
                for (wj, cj) in words.iter().zip(coeffs.iter()) {
                    let mut full = wi.clone();
                    full.extend(reflect_word(&oracle, wj));
                    acc += ci * cj.conj() * oracle.eval(&full).unwrap();
                }
            }
            acc.norm()
        };
        let tau = 0.2;
        let pair = vec![Letter::new(1, tau), Letter::new(2, tau)];
        let merged = vec![Letter::new(0, tau)]; // e00 = e01 e10
        assert!(norm2(&pair, &merged) < 1e-12);
        let mut pair_g = pair.clone();
        pair_g.push(Letter::new(3, 0.4));
        let mut merged_g = merged.clone();
        merged_g.push(Letter::new(3, 0.4));
        assert!(norm2(&pair_g, &merged_g) < 1e-12);
    }
}

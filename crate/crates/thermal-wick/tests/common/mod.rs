//! Shared brute-force reference computations for integration tests.
//!
//! Everything here is deliberately independent of the library's spectral
//! evaluation paths: matrix exponentials go through scaling-and-squaring
//! Taylor series, Green functions through literal operator products and
//! traces, fermions through explicit Jordan-Wigner matrices.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thermal_wick::linalg::{CMat, CVec};
use thermal_wick::modular::GnsTriple;
use thermal_wick::oracle::Letter;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Deterministic pseudo-random Hermitian matrix (simple LCG, no external
/// randomness).
pub fn random_hermitian(dim: usize, seed: u64) -> CMat {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(99);
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let raw = DMatrix::from_fn(dim, dim, |_, _| C64::new(next(), next()));
    (&raw + raw.adjoint()) * c(0.5, 0.0)
}

pub fn random_complex_matrix(dim: usize, seed: u64) -> CMat {
    random_hermitian(dim, seed) + random_hermitian(dim, seed.wrapping_add(7919)) * C64::i()
}

/// Matrix exponential by scaling and squaring with a Taylor series; an
/// independent oracle against the library's spectral exponentials.
pub fn expm_taylor(m: &CMat) -> CMat {
    let n = m.nrows();
    let norm = m.norm();
    let k = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / c(2f64.powi(k as i32), 0.0);
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for j in 1..60 {
        term = (&term * &scaled) / c(j as f64, 0.0);
        sum += &term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    let mut out = sum;
    for _ in 0..k {
        out = &out * &out;
    }
    out
}

/// Brute-force thermal Green function
/// `tr(e^{-beta h} prod_j e^{i z_j h} a_j e^{-i z_j h}) / tr(e^{-beta h})`,
/// with every exponential from [`expm_taylor`].
pub fn brute_green(h: &CMat, beta: f64, word: &[(CMat, C64)]) -> C64 {
    let d = h.nrows();
    let rho_un = expm_taylor(&(-h * c(beta, 0.0)));
    let xi: C64 = rho_un.trace();
    let mut acc = rho_un;
    for (a, z) in word {
        let plus = expm_taylor(&(h * (C64::i() * z)));
        let minus = expm_taylor(&(-h * (C64::i() * z)));
        acc = acc * plus * a * minus;
    }
    let _ = d;
    acc.trace() / xi
}

/// Jordan-Wigner annihilation operators for `modes` fermionic modes on the
/// full `2^modes` Fock space.
pub fn jw_annihilators(modes: usize) -> Vec<CMat> {
    let dim = 1usize << modes;
    let lower = DMatrix::from_fn(2, 2, |i, j| {
        if i == 0 && j == 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let z = DMatrix::from_fn(2, 2, |i, j| {
        if i != j {
            c(0.0, 0.0)
        } else if i == 0 {
            c(1.0, 0.0)
        } else {
            c(-1.0, 0.0)
        }
    });
    let id = CMat::identity(2, 2);
    (0..modes)
        .map(|k| {
            let mut op = CMat::identity(1, 1);
            for site in 0..modes {
                let factor = if site < k {
                    &z
                } else if site == k {
                    &lower
                } else {
                    &id
                };
                op = op.kronecker(factor);
            }
            assert_eq!(op.nrows(), dim);
            op
        })
        .collect()
}

/// Free-fermion Hamiltonian `sum_k eps_k psi_k* psi_k` on the Fock space.
pub fn jw_hamiltonian(energies: &[f64]) -> CMat {
    let ops = jw_annihilators(energies.len());
    let dim = 1usize << energies.len();
    let mut h = CMat::zeros(dim, dim);
    for (op, &eps) in ops.iter().zip(energies) {
        h += op.adjoint() * op * c(eps, 0.0);
    }
    h
}

/// The GNS vector of a formal word,
/// `Phi([b_1,s_1,...,b_n,s_n]) = e^{-s_1 L} lambda(b_1) e^{-(s_2-s_1) L}
///  lambda(b_2) ... e^{-(s_n - s_{n-1}) L} lambda(b_n) Omega`,
/// evaluated in the Hilbert-Schmidt carrier.
pub fn gns_word_vector(triple: &GnsTriple, word: &[(CMat, f64)]) -> CVec {
    let mut x = triple.omega.clone();
    let n = word.len();
    for j in (0..n).rev() {
        x = triple.lambda(&word[j].0) * x;
        let prev = if j == 0 { 0.0 } else { word[j - 1].1 };
        let gap = word[j].1 - prev;
        x = triple.liouvillian_fn(|l| c((-gap * l).exp(), 0.0)) * x;
    }
    x
}

/// Letters for a two-sided word in oracle index form.
pub fn letters(pairs: &[(usize, f64)]) -> Vec<Letter> {
    pairs.iter().map(|&(g, tau)| Letter::new(g, tau)).collect()
}

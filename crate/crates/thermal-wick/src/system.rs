//! Exact thermal quantum mechanics of finite-dimensional systems.
//!
//! A [`ThermalSystem`] is a finite Hilbert space with a Hermitian
//! Hamiltonian, optional conserved charges with chemical potentials, and an
//! inverse temperature. It evaluates Gibbs states, complex-time Heisenberg
//! evolution and thermal Green functions exactly through the spectral
//! decomposition of `H_mu = H - sum_i mu_i Q_i`.
//!
//! Green functions of words `(a_1, z_1), ..., (a_n, z_n)` with complex times
//! in the closed tube `Im z_1 <= ... <= Im z_n <= Im z_1 + beta` are
//! evaluated in a transfer-product form in which every exponential factor is
//! bounded by one, so large `beta` never overflows.

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermitian_part, hermiticity_defect, operator_norm, CMat, CVec};
use nalgebra::DVector;
use num_complex::Complex64 as C64;

/// Relative Hermiticity tolerance for input matrices.
pub const HERMITICITY_RTOL: f64 = 1e-12;

/// Relative commutation tolerance for conserved charges.
pub const CHARGE_COMMUTATION_RTOL: f64 = 1e-10;

/// Absolute slack allowed when checking cyclic imaginary-time order.
pub const ORDER_SLACK: f64 = 1e-12;

/// A labeled element of the finite matrix algebra.
#[derive(Debug, Clone)]
pub struct Observable {
    pub label: String,
    pub matrix: CMat,
}

impl Observable {
    pub fn new(label: impl Into<String>, matrix: CMat) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::Config(format!(
                "observable matrix must be square with d >= 1, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { label: label.into(), matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { label: "1".into(), matrix: CMat::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Operator norm (largest singular value).
    pub fn norm(&self) -> f64 {
        operator_norm(&self.matrix)
    }

    /// The adjoint observable, labeled `<label>*`.
    pub fn star(&self) -> Self {
        Self {
            label: format!("{}*", self.label),
            matrix: self.matrix.adjoint(),
        }
    }
}

/// Gibbs density matrix together with the log partition function.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub rho: CMat,
    pub log_xi: f64,
}

/// A finite quantum system in thermal equilibrium.
#[derive(Debug, Clone)]
pub struct ThermalSystem {
    dim: usize,
    h: CMat,
    charges: Vec<CMat>,
    mu: Vec<f64>,
    beta: f64,
    /// Eigenvalues of `H_mu`, ascending.
    energies: DVector<f64>,
    /// Unitary with eigenvectors of `H_mu` as columns.
    vectors: CMat,
}

impl ThermalSystem {
    /// Validate and diagonalize. Inputs are symmetrized after the
    /// Hermiticity check to stabilize the eigensolver.
    pub fn new(h: CMat, charges: Vec<CMat>, mu: Vec<f64>, beta: f64) -> Result<Self> {
        let dim = h.nrows();
        if dim == 0 || h.ncols() != dim {
            return Err(Error::Config("Hamiltonian must be square with d >= 1".into()));
        }
        if charges.len() != mu.len() {
            return Err(Error::Config(format!(
                "{} charges but {} chemical potentials",
                charges.len(),
                mu.len()
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {beta}")));
        }
        if hermiticity_defect(&h) > HERMITICITY_RTOL {
            return Err(Error::NonHermitianInput(format!(
                "H deviates from H* by relative {:.3e}",
                hermiticity_defect(&h)
            )));
        }
        let h = hermitian_part(&h);
        let mut charges_sym = Vec::with_capacity(charges.len());
        let h_norm = h.norm().max(1e-300);
        for (i, q) in charges.into_iter().enumerate() {
            if q.nrows() != dim || q.ncols() != dim {
                return Err(Error::Config(format!("charge {i} has wrong dimension")));
            }
            if hermiticity_defect(&q) > HERMITICITY_RTOL {
                return Err(Error::NonHermitianInput(format!(
                    "Q_{i} deviates from its adjoint by relative {:.3e}",
                    hermiticity_defect(&q)
                )));
            }
            let q = hermitian_part(&q);
            let comm = (&h * &q - &q * &h).norm();
            if comm > CHARGE_COMMUTATION_RTOL * h_norm * q.norm().max(1e-300) {
                return Err(Error::Config(format!(
                    "charge {i} does not commute with H: ||[H,Q]|| = {comm:.3e}"
                )));
            }
            charges_sym.push(q);
        }
        let mut h_mu = h.clone();
        for (q, &m) in charges_sym.iter().zip(mu.iter()) {
            h_mu -= q * C64::new(m, 0.0);
        }
        let eig = eigh(&h_mu);
        Ok(Self {
            dim,
            h,
            charges: charges_sym,
            mu,
            beta,
            energies: eig.values,
            vectors: eig.vectors,
        })
    }

    /// Convenience constructor: a two-level system with `H = diag(0, e)`.
    pub fn qubit(e: f64, beta: f64) -> Self {
        let h = CMat::from_diagonal(&CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(e, 0.0)]));
        Self::new(h, vec![], vec![], beta).expect("diagonal qubit input is always valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.h
    }

    pub fn charges(&self) -> &[CMat] {
        &self.charges
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `H_mu = H - sum_i mu_i Q_i`.
    pub fn h_mu(&self) -> CMat {
        &self.vectors
            * CMat::from_diagonal(&self.energies.map(|e| C64::new(e, 0.0)))
            * self.vectors.adjoint()
    }

    /// Eigenvalues of `H_mu`, ascending.
    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    /// Gibbs state `rho = exp(-beta H_mu) / Xi`. The largest exponent is
    /// subtracted before exponentiation so large `beta` cannot overflow.
    pub fn gibbs_state(&self) -> GibbsState {
        let exponents: Vec<f64> = self.energies.iter().map(|&e| -self.beta * e).collect();
        let m = exponents.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = exponents.iter().map(|&x| (x - m).exp()).collect();
        let z: f64 = weights.iter().sum();
        let probs = DVector::from_iterator(self.dim, weights.iter().map(|&w| C64::new(w / z, 0.0)));
        let rho = &self.vectors * CMat::from_diagonal(&probs) * self.vectors.adjoint();
        GibbsState { rho, log_xi: m + z.ln() }
    }

    /// Complex-time Heisenberg evolution
    /// `alpha_z(a) = e^{izH_mu} a e^{-izH_mu}`, entire in `z`.
    pub fn evolve(&self, a: &Observable, z: C64) -> Observable {
        let tilde = self.vectors.adjoint() * &a.matrix * &self.vectors;
        let phased = CMat::from_fn(self.dim, self.dim, |j, k| {
            let w = C64::i() * z * (self.energies[j] - self.energies[k]);
            tilde[(j, k)] * w.exp()
        });
        Observable {
            label: a.label.clone(),
            matrix: &self.vectors * phased * self.vectors.adjoint(),
        }
    }

    /// Thermal Green function
    /// `F_beta(a_1, z_1, ..., a_n, z_n) = tr(rho prod_j alpha_{z_j}(a_j))`
    /// for complex times in the closed tube
    /// `Im z_1 <= ... <= Im z_n <= Im z_1 + beta`.
    pub fn green_function(&self, word: &[(&Observable, C64)]) -> Result<C64> {
        for pair in word.windows(2) {
            if pair[1].1.im < pair[0].1.im - ORDER_SLACK {
                return Err(Error::TubeViolation(format!(
                    "Im z must be non-decreasing, got {} after {}",
                    pair[1].1.im, pair[0].1.im
                )));
            }
        }
        if let (Some(first), Some(last)) = (word.first(), word.last()) {
            if last.1.im > first.1.im + self.beta + ORDER_SLACK {
                return Err(Error::TubeViolation(format!(
                    "Im z_n - Im z_1 = {} exceeds beta = {}",
                    last.1.im - first.1.im,
                    self.beta
                )));
            }
        }
        Ok(self.green_function_unchecked(word))
    }

    /// The same trace as [`green_function`](Self::green_function) without
    /// the tube check. At finite dimension the trace is entire in all time
    /// variables, so this is the analytic continuation everywhere; outside
    /// the closed tube the factors are no longer bounded by one and the
    /// value may be exponentially large.
    pub fn green_function_unchecked(&self, word: &[(&Observable, C64)]) -> C64 {
        let n = word.len();
        if n == 0 {
            return C64::new(1.0, 0.0);
        }
        let e_min = self.energies.min();
        let shifted: Vec<f64> = self.energies.iter().map(|&e| e - e_min).collect();
        let xi: f64 = shifted.iter().map(|&e| (-self.beta * e).exp()).sum();

        // tr(rho prod_j alpha_{z_j}(a_j))
        //   = (1/Xi) tr(a~_1 D(w_1) a~_2 D(w_2) ... a~_n D(w_n)),
        // in the eigenbasis of H_mu, with w_j = i(z_{j+1} - z_j) for j < n and
        // w_n = i(z_1 + i beta - z_n). In the closed tube Re(w_j) <= 0 for
        // all j once the spectrum is shifted to be non-negative.
        let diag = |w: C64| -> CVec {
            CVec::from_iterator(self.dim, shifted.iter().map(|&e| (w * e).exp()))
        };
        let mut acc = self.vectors.adjoint() * &word[0].0.matrix * &self.vectors;
        for j in 0..n {
            let w = if j + 1 < n {
                C64::i() * (word[j + 1].1 - word[j].1)
            } else {
                C64::i() * (word[0].1 + C64::new(0.0, self.beta) - word[n - 1].1)
            };
            let d = diag(w);
            for col in 0..self.dim {
                let scale = d[col];
                for row in 0..self.dim {
                    acc[(row, col)] *= scale;
                }
            }
            if j + 1 < n {
                let tilde = self.vectors.adjoint() * &word[j + 1].0.matrix * &self.vectors;
                acc *= tilde;
            }
        }
        let trace: C64 = (0..self.dim).map(|k| acc[(k, k)]).sum();
        trace / xi
    }

    /// Real-time thermal Green function of a word of observables at real
    /// times, `tr(rho alpha_{t_1}(a_1) ... alpha_{t_n}(a_n))`.
    pub fn rtgf(&self, word: &[(&Observable, f64)]) -> C64 {
        let z_word: Vec<(&Observable, C64)> =
            word.iter().map(|&(a, t)| (a, C64::new(t, 0.0))).collect();
        self.green_function_unchecked(&z_word)
    }

    /// Temperature-ordered Green function at imaginary times `z_j = i tau_j`.
    ///
    /// The times must be cyclically ordered,
    /// `tau_1 <= ... <= tau_n <= tau_1 + beta`, up to a small slack.
    pub fn togf(&self, word: &[(&Observable, f64)]) -> Result<C64> {
        check_cyclic_order(word.iter().map(|&(_, tau)| tau), self.beta)?;
        let z_word: Vec<(&Observable, C64)> =
            word.iter().map(|&(a, tau)| (a, C64::new(0.0, tau))).collect();
        Ok(self.green_function_unchecked(&z_word))
    }

    /// Maximum over the grid of the KMS defect
    /// `|tr(rho alpha_t(a) b) - tr(rho b alpha_{t+i beta}(a))|`.
    pub fn kms_residual(&self, a: &Observable, b: &Observable, t_grid: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for &t in t_grid {
            let lhs =
                self.green_function_unchecked(&[(a, C64::new(t, 0.0)), (b, C64::new(0.0, 0.0))]);
            let rhs =
                self.green_function_unchecked(&[(b, C64::new(0.0, 0.0)), (a, C64::new(t, self.beta))]);
            worst = worst.max((lhs - rhs).norm());
        }
        worst
    }
}

/// Check `tau_1 <= ... <= tau_n <= tau_1 + beta` with [`ORDER_SLACK`] slack.
pub fn check_cyclic_order(taus: impl IntoIterator<Item = f64>, beta: f64) -> Result<()> {
    let taus: Vec<f64> = taus.into_iter().collect();
    let slack = ORDER_SLACK * beta.max(1.0);
    for pair in taus.windows(2) {
        if pair[1] < pair[0] - slack {
            return Err(Error::OrderViolation(format!(
                "tau must be non-decreasing, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    if let (Some(&first), Some(&last)) = (taus.first(), taus.last()) {
        if last > first + beta + slack {
            return Err(Error::OrderViolation(format!(
                "tau_n - tau_1 = {} exceeds beta = {beta}",
                last - first
            )));
        }
    }
    Ok(())
}

//! Reconstruction of the real-time theory from temperature-ordered Green
//! functions alone.
//!
//! Given nothing but a [`TogfOracle`], the pipeline builds:
//!
//! 1. a finite word basis sampling the formal polynomial space of
//!    `[a_1, tau_1, ..., a_n, tau_n]` with `0 < tau_1 < ... < tau_n < beta/2`,
//! 2. its Gram matrix from the oracle and whitened coordinates for the
//!    quotient by the Gram kernel,
//! 3. the imaginary-time shift operator on the basis, from which the
//!    Liouvillian is extracted through a generalized Hermitian eigenproblem,
//! 4. the modular conjugation from the star-reflection of words,
//! 5. left and right representations of the generators,
//! 6. real-time Green functions by spectral continuation, which for an
//!    oracle backed by a finite system reproduce the exact ones.
//!
//! Sign convention: the extracted shift semigroup satisfies
//! `Gamma_delta = e^{-delta L}` with `L` the Liouvillian of the real-time
//! flow `e^{itL} lambda(a) e^{-itL}`; the eigenvalues of `L` are Bohr
//! frequencies of the underlying dynamics.

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermitian_part, hermiticity_defect, operator_norm, pairing, CMat, CVec};
use crate::oracle::{reflect_word, FormalWord, Generator, Letter, TogfOracle};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default relative cutoff for quotienting Gram-kernel directions. The
/// single most result-sensitive knob of the pipeline; recorded in every
/// report.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

/// Default cap on the word-basis size.
pub const DEFAULT_BASIS_CAP: usize = 4096;

/// A word stored as grid indices so that star-reflection and shifts are
/// exact integer operations. Index `k` means time `k * beta/(2 (m+1))`;
/// interior words use `1..=m`, boundary insertions 0 and `m+1`.
pub type IndexWord = Vec<(usize, usize)>;

/// Finite sampling of the formal word space: all words over the oracle's
/// generators with strictly increasing times on a uniform grid inside
/// `(0, beta/2)`, plus the empty word.
#[derive(Debug, Clone)]
pub struct WordBasis {
    /// Words as (generator, grid index) pairs; `words[0]` is empty.
    pub words: Vec<IndexWord>,
    /// Interior grid points `delta, 2 delta, ..., m delta`.
    pub grid: Vec<f64>,
    /// Grid step `delta = (beta/2) / (m + 1)`.
    pub grid_step: f64,
    pub beta: f64,
    m: usize,
}

impl WordBasis {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Time of grid index `k`.
    pub fn tau(&self, k: usize) -> f64 {
        k as f64 * self.grid_step
    }

    /// The word as oracle letters.
    pub fn formal(&self, i: usize) -> FormalWord {
        self.words[i]
            .iter()
            .map(|&(g, k)| Letter::new(g, self.tau(k)))
            .collect()
    }

    /// Star-reflection on grid indices: letters reversed and starred,
    /// `tau -> beta/2 - tau`, i.e. `k -> m + 1 - k`.
    pub fn reflect(&self, i: usize, star: &[usize]) -> IndexWord {
        self.words[i]
            .iter()
            .rev()
            .map(|&(g, k)| (star[g], self.m + 1 - k))
            .collect()
    }

    /// Position of an index word in the basis, if present.
    pub fn position(&self, word: &IndexWord) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }

    /// Largest grid index used by word `i` (0 for the empty word).
    fn max_index(&self, i: usize) -> usize {
        self.words[i].iter().map(|&(_, k)| k).max().unwrap_or(0)
    }
}

/// Enumerate all words of length `1..=n_max` over the oracle's generators
/// with strictly increasing times on the `m`-point grid, preceded by the
/// empty word. Deterministic ordering: by length, then lexicographically in
/// (time indices, generator indices). The basis is closed under
/// star-reflection because the grid is symmetric under
/// `tau -> beta/2 - tau` and the generator set is star-closed.
pub fn build_basis(
    oracle: &dyn TogfOracle,
    n_max: usize,
    m: usize,
    cap: usize,
) -> Result<WordBasis> {
    if n_max < 1 || m < 1 {
        return Err(Error::Config("need n_max >= 1 and m >= 1".into()));
    }
    let g = oracle.generators().len();
    let beta = oracle.beta();
    let grid_step = (beta / 2.0) / (m + 1) as f64;
    let grid: Vec<f64> = (1..=m).map(|k| k as f64 * grid_step).collect();

    let mut expected: usize = 1;
    for len in 1..=n_max.min(m) {
        let mut combos: usize = 1;
        for j in 0..len {
            combos = combos * (m - j) / (j + 1);
        }
        let mut gens_pow: usize = 1;
        for _ in 0..len {
            gens_pow = gens_pow.saturating_mul(g);
        }
        expected = expected.saturating_add(combos.saturating_mul(gens_pow));
    }
    if expected > cap {
        return Err(Error::SizeLimit(format!(
            "basis would hold {expected} words, cap is {cap}"
        )));
    }

    let mut words: Vec<IndexWord> = vec![vec![]];
    let mut time_tuples: Vec<Vec<usize>> = Vec::new();
    for len in 1..=n_max.min(m) {
        // Strictly increasing grid-index tuples of this length.
        let mut stack: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..len {
            let mut next = Vec::new();
            for partial in &stack {
                let start = partial.last().map_or(1, |&k| k + 1);
                for k in start..=m {
                    let mut t = partial.clone();
                    t.push(k);
                    next.push(t);
                }
            }
            stack = next;
        }
        time_tuples.extend(stack);
    }
    for tuple in &time_tuples {
        let len = tuple.len();
        let mut assign = vec![0usize; len];
        loop {
            words.push(
                assign
                    .iter()
                    .zip(tuple.iter())
                    .map(|(&gen, &k)| (gen, k))
                    .collect(),
            );
            // Advance the generator odometer, last position fastest.
            let mut pos = len;
            let mut done = true;
            while pos > 0 {
                pos -= 1;
                assign[pos] += 1;
                if assign[pos] < g {
                    done = false;
                    break;
                }
                assign[pos] = 0;
            }
            if done {
                break;
            }
        }
    }
    words.sort_by(|a, b| {
        a.len().cmp(&b.len()).then_with(|| {
            let ta: Vec<usize> = a.iter().map(|&(_, k)| k).collect();
            let tb: Vec<usize> = b.iter().map(|&(_, k)| k).collect();
            ta.cmp(&tb).then_with(|| {
                let ga: Vec<usize> = a.iter().map(|&(gg, _)| gg).collect();
                let gb: Vec<usize> = b.iter().map(|&(gg, _)| gg).collect();
                ga.cmp(&gb)
            })
        })
    });
    words.dedup();
    Ok(WordBasis { words, grid, grid_step, beta, m })
}

/// Gram matrix `G[i][j] = <v_i, v_j> = phi(v_i ++ reflect(v_j))`, linear in
/// the first index and anti-linear in the second. Hermitian and positive
/// semi-definite for any compliant oracle.
pub fn gram_matrix(oracle: &dyn TogfOracle, basis: &WordBasis) -> Result<CMat> {
    let n = basis.len();
    let reflections: Vec<FormalWord> = (0..n)
        .map(|j| reflect_word(oracle, &basis.formal(j)))
        .collect();
    let entries: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let vi = basis.formal(i);
            (0..n)
                .map(|j| {
                    let mut word = vi.clone();
                    word.extend(reflections[j].iter().cloned());
                    oracle.eval(&word).expect("gram entry evaluation")
                })
                .collect()
        })
        .collect();
    let g = CMat::from_fn(n, n, |i, j| entries[i][j]);
    let defect = hermiticity_defect(&g);
    if defect > 1e-10 {
        return Err(Error::OraclePsdViolation(format!(
            "gram matrix deviates from Hermitian by relative {defect:.3e}"
        )));
    }
    let g = hermitian_part(&g);
    let eig = eigh(&g);
    let lmax = eig.values.max().max(0.0);
    if eig.values.min() < -1e-6 * lmax.max(1.0) {
        return Err(Error::OraclePsdViolation(format!(
            "gram eigenvalue {:.3e} (max {:.3e}); oracle violates reflection positivity",
            eig.values.min(),
            lmax
        )));
    }
    Ok(g)
}

/// Whitened coordinates for the quotient by the Gram kernel.
///
/// `forward` maps word coefficients to `C^r` such that the oracle inner
/// product becomes the standard one; `backward` is its right inverse,
/// picking a representative.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub forward: CMat,
    pub backward: CMat,
    pub rank: usize,
    /// Gram eigenvalues, ascending (before the cutoff).
    pub eigenvalues: Vec<f64>,
    pub rel_tol: f64,
}

/// Eigendecompose a PSD Gram matrix and quotient away directions with
/// eigenvalue at most `rel_tol * lambda_max`.
pub fn quotient(g: &CMat, rel_tol: f64) -> Result<Quotient> {
    let n = g.nrows();
    let eig = eigh(g);
    let lmax = eig.values.max().max(0.0);
    let kept: Vec<usize> = (0..n)
        .filter(|&k| eig.values[k] > rel_tol * lmax && eig.values[k] > 0.0)
        .collect();
    let r = kept.len();
    if r == 0 && n > 0 {
        return Err(Error::RankZero);
    }
    let mut forward = CMat::zeros(r, n);
    let mut backward = CMat::zeros(n, r);
    for (row, &k) in kept.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for i in 0..n {
            // forward = diag(sqrt g) U^T (transpose, no conjugation);
            // backward = conj(U) diag(1/sqrt g).
            forward[(row, i)] = eig.vectors[(i, k)] * s;
            backward[(i, row)] = eig.vectors[(i, k)].conj() / s;
        }
    }
    Ok(Quotient {
        forward,
        backward,
        rank: r,
        eigenvalues: eig.values.iter().cloned().collect(),
        rel_tol,
    })
}

impl Quotient {
    /// Whitened matrix of an operator given its sandwich
    /// `B[i][j] = <A v_j, v_i>`.
    pub fn compress(&self, b: &CMat) -> CMat {
        self.backward.adjoint() * b * &self.backward
    }
}

/// Imaginary-time shift data: the surviving word indices and the matrix
/// `A[i][j] = <(v_j)_delta, v_i>` on them.
#[derive(Debug, Clone)]
pub struct ShiftGram {
    pub domain: Vec<usize>,
    pub matrix: CMat,
    pub delta: f64,
}

/// Entries `<v shifted by delta, w>` over the domain of words whose times
/// stay at or below `beta/2` after the shift. Symmetric under
/// `<v_tau, w> = <v, w_tau>`, hence Hermitian.
pub fn shift_gram(oracle: &dyn TogfOracle, basis: &WordBasis, delta: f64) -> Result<ShiftGram> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("shift must be positive, got {delta}")));
    }
    let slack = 1e-9 * basis.beta.max(1.0);
    let domain: Vec<usize> = (0..basis.len())
        .filter(|&i| basis.tau(basis.max_index(i)) + delta <= basis.beta / 2.0 + slack)
        .collect();
    if domain.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let nd = domain.len();
    let reflections: Vec<FormalWord> = domain
        .iter()
        .map(|&i| reflect_word(oracle, &basis.formal(i)))
        .collect();
    let entries: Vec<Vec<C64>> = (0..nd)
        .into_par_iter()
        .map(|row| {
            (0..nd)
                .map(|col| {
                    let j = domain[col];
                    let mut word: FormalWord = basis
                        .formal(j)
                        .iter()
                        .map(|l| Letter::new(l.gen, l.tau + delta))
                        .collect();
                    word.extend(reflections[row].iter().cloned());
                    oracle.eval(&word).expect("shift gram entry")
                })
                .collect()
        })
        .collect();
    let a = CMat::from_fn(nd, nd, |i, j| entries[i][j]);
    let defect = hermiticity_defect(&a);
    if defect > 1e-9 {
        return Err(Error::NonHermitianInput(format!(
            "shift Gram deviates from Hermitian by relative {defect:.3e}"
        )));
    }
    Ok(ShiftGram { domain, matrix: hermitian_part(&a), delta })
}

/// Spectrum of the whitened transfer operator `Gamma_delta` from the
/// generalized problem `A x = mu G x` restricted to the shift domain.
///
/// Returns the positive eigenvalues `mu` (ascending), their eigenvectors in
/// whitened domain coordinates, and the domain quotient. Any `mu` at or
/// below `rel_tol` (relative to the largest) aborts with
/// [`Error::NonPositiveSemigroup`].
pub fn transfer_spectrum(
    g: &CMat,
    shift: &ShiftGram,
    rel_tol: f64,
) -> Result<(Vec<f64>, CMat, Quotient)> {
    let nd = shift.domain.len();
    let g_d = CMat::from_fn(nd, nd, |i, j| g[(shift.domain[i], shift.domain[j])]);
    let q_d = quotient(&g_d, rel_tol)?;
    let gamma = hermitian_part(&q_d.compress(&shift.matrix));
    let eig = eigh(&gamma);
    let mu: Vec<f64> = eig.values.iter().cloned().collect();
    let mu_max = mu.iter().cloned().fold(0.0f64, f64::max);
    if let Some(&bad) = mu.iter().find(|&&v| v <= rel_tol * mu_max.max(1.0)) {
        return Err(Error::NonPositiveSemigroup(format!(
            "transfer eigenvalue {bad:.3e} (max {mu_max:.3e}); insufficient sampling or non-KMS oracle"
        )));
    }
    Ok((mu, eig.vectors, q_d))
}

/// Consistency of the transfer spectra at `delta` and `2 delta`: the
/// relative mismatch `max_k |mu_k(2 delta) - mu_k(delta)^2| / (1 + mu_k^2)`
/// over the common count of eigenvalues, both sorted ascending.
pub fn semigroup_consistency(mu_delta: &[f64], mu_2delta: &[f64]) -> f64 {
    let n = mu_delta.len().min(mu_2delta.len());
    let skip_a = mu_delta.len() - n;
    let skip_b = mu_2delta.len() - n;
    let mut worst = 0.0f64;
    for k in 0..n {
        let sq = mu_delta[skip_a + k] * mu_delta[skip_a + k];
        let m2 = mu_2delta[skip_b + k];
        worst = worst.max((m2 - sq).abs() / (1.0 + sq));
    }
    worst
}

/// Everything the reconstruction produces: whitened coordinates, the
/// Liouvillian, the modular conjugation, the vacuum and both
/// representations.
pub struct ReconstructedSpace {
    pub basis: WordBasis,
    pub gram: CMat,
    pub quotient: Quotient,
    /// Liouvillian on the whitened space, `r x r` Hermitian, in the
    /// real-time convention `Gamma_delta = e^{-delta L}`.
    pub liouvillian: CMat,
    /// Whitened coordinates of the vacuum (the empty word).
    pub omega: CVec,
    /// Matrix part of the anti-unitary `J`: `J c = u_j conj(c)`.
    pub u_j: CMat,
    /// Left representation per generator.
    pub lambdas: Vec<CMat>,
    /// Right (anti-)representation per generator, `rho(g) = J lambda(g) J`.
    pub rhos: Vec<CMat>,
    pub generators: Vec<Generator>,
    pub beta: f64,
    liouvillian_eig: (nalgebra::DVector<f64>, CMat),
}

/// Per-generator residuals of the representation contracts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepresentationContract {
    pub label: String,
    /// `max(0, ||lambda(g)|| - declared bound)`; zero for unbounded
    /// generators.
    pub norm_excess: f64,
    /// `||lambda(g)† - lambda(g*)||`.
    pub adjoint_residual: f64,
    /// `||rho(g) - u_j conj(lambda(g)) u_j^{-1}||`.
    pub conjugation_residual: f64,
}

/// Scalar diagnostics of a reconstruction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub basis_size: usize,
    pub rank: usize,
    pub rel_tol: f64,
    pub delta: f64,
    /// Extracted Liouvillian spectrum, ascending.
    pub spectrum: Vec<f64>,
    /// Relative mismatch between the transfer spectra at delta and 2 delta
    /// (`None` when the 2 delta domain is empty).
    pub consistency_mismatch: Option<f64>,
    /// `||T† T - 1||` for the embedding of the shift-domain whitening into
    /// the full whitening; zero when the shift domain spans the quotient.
    pub embedding_defect: f64,
    /// Rank of the shift-domain quotient.
    pub domain_rank: usize,
    pub hermiticity_residual: f64,
    /// `||u_j conj(u_j) - 1||` (J is an involution).
    pub j_involution_residual: f64,
    /// `||J omega - omega||`.
    pub j_vacuum_residual: f64,
    /// `||J L + L J|| / (1 + ||L||)` as anti-linear composition.
    pub j_liouvillian_residual: f64,
    pub contracts: Vec<RepresentationContract>,
    /// Smallest over largest Gram eigenvalue.
    pub gram_condition: f64,
}

/// Tunables of the pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructParams {
    pub n_max: usize,
    pub m: usize,
    /// Imaginary-time shift for the Liouvillian extraction; defaults to
    /// the grid step.
    pub delta: Option<f64>,
    pub rel_tol: f64,
    pub basis_cap: usize,
}

impl Default for ReconstructParams {
    fn default() -> Self {
        Self {
            n_max: 1,
            m: 1,
            delta: None,
            rel_tol: DEFAULT_REL_TOL,
            basis_cap: DEFAULT_BASIS_CAP,
        }
    }
}

/// The modular conjugation in whitened coordinates: on words,
/// `j [a_1,tau_1,...,a_n,tau_n] = [a_n*, beta/2 - tau_n, ..., a_1*,
/// beta/2 - tau_1]` with coefficient conjugation. Returns the matrix `u_j`
/// of `J c = u_j conj(c)`.
pub fn build_j(oracle: &dyn TogfOracle, basis: &WordBasis, q: &Quotient) -> Result<CMat> {
    let star: Vec<usize> = (0..oracle.generators().len())
        .map(|g| oracle.star(g))
        .collect();
    let n = basis.len();
    let mut perm = CMat::zeros(n, n);
    for i in 0..n {
        let reflected = basis.reflect(i, &star);
        let j = basis
            .position(&reflected)
            .ok_or_else(|| Error::Closure(format!("reflection of word {i} is not in the basis")))?;
        perm[(j, i)] = C64::new(1.0, 0.0);
    }
    // J(sum x_i v_i) = sum conj(x_i) v_{perm(i)}; whitened: u_j = Q P conj(R).
    Ok(&q.forward * perm * q.backward.map(|v| v.conj()))
}

/// Left and right representations of generator `g` in whitened
/// coordinates, with their contract residuals.
///
/// `lambda(g)` prepends `(g, 0)`; `rho(g)` appends `(g*, beta/2)`. Both are
/// computed from oracle inner products of the image words against the
/// basis, then compressed through the quotient.
pub fn represent(
    oracle: &dyn TogfOracle,
    basis: &WordBasis,
    q: &Quotient,
    u_j: &CMat,
    g: usize,
) -> Result<(CMat, CMat, RepresentationContract)> {
    let info = oracle.generators()[g].clone();
    let star_g = oracle.star(g);
    let n = basis.len();
    let beta = basis.beta;

    let sandwich = |image: &(dyn Fn(usize) -> FormalWord + Sync)| -> CMat {
        let reflections: Vec<FormalWord> = (0..n)
            .map(|i| reflect_word(oracle, &basis.formal(i)))
            .collect();
        let entries: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut word = image(j);
                        word.extend(reflections[i].iter().cloned());
                        oracle.eval(&word).expect("representation entry")
                    })
                    .collect()
            })
            .collect();
        CMat::from_fn(n, n, |i, j| entries[i][j])
    };

    let lambda = q.compress(&sandwich(&|j: usize| {
        let mut word = vec![Letter::new(g, 0.0)];
        word.extend(basis.formal(j));
        word
    }));
    let rho = q.compress(&sandwich(&|j: usize| {
        let mut word = basis.formal(j);
        word.push(Letter::new(star_g, beta / 2.0));
        word
    }));

    let norm = operator_norm(&lambda);
    let norm_excess = if info.norm_bound.is_finite() {
        (norm - info.norm_bound).max(0.0)
    } else {
        0.0
    };
    if norm_excess > 1e-4 {
        return Err(Error::NormViolation(format!(
            "||lambda({})|| = {norm:.6} exceeds declared bound {:.6}; quotient under-resolved",
            info.label, info.norm_bound
        )));
    }

    let lambda_star = q.compress(&sandwich(&|j: usize| {
        let mut word = vec![Letter::new(star_g, 0.0)];
        word.extend(basis.formal(j));
        word
    }));
    let adjoint_residual = (lambda.adjoint() - &lambda_star).norm();

    // rho(g) = u_j conj(lambda(g)) u_j^{-1}; u_j conj(u_j) = 1, so the
    // inverse of "conjugate then multiply by u_j" pairs with conj(u_j).
    let conj_side = u_j * lambda.map(|v| v.conj()) * u_j.map(|v| v.conj());
    let conjugation_residual = (&rho - conj_side).norm();

    Ok((
        lambda,
        rho,
        RepresentationContract {
            label: info.label,
            norm_excess,
            adjoint_residual,
            conjugation_residual,
        },
    ))
}

/// Run the whole pipeline.
pub fn reconstruct(
    oracle: &dyn TogfOracle,
    params: &ReconstructParams,
) -> Result<(ReconstructedSpace, ReconstructionReport)> {
    let basis = build_basis(oracle, params.n_max, params.m, params.basis_cap)?;
    let gram = gram_matrix(oracle, &basis)?;
    let q = quotient(&gram, params.rel_tol)?;

    let delta = params.delta.unwrap_or(basis.grid_step);
    let shift = shift_gram(oracle, &basis, delta)?;
    let (mu, vectors, q_d) = transfer_spectrum(&gram, &shift, params.rel_tol)?;

    let consistency_mismatch = match shift_gram(oracle, &basis, 2.0 * delta) {
        Ok(shift2) => {
            let (mu2, _, _) = transfer_spectrum(&gram, &shift2, params.rel_tol)?;
            Some(semigroup_consistency(&mu, &mu2))
        }
        Err(Error::EmptyDomain) => None,
        Err(e) => return Err(e),
    };

    // Embed the shift-domain whitening into the full whitening:
    // T = Q_full . (domain representative), an isometry when the domain
    // spans the quotient.
    let n = basis.len();
    let mut lift = CMat::zeros(n, q_d.rank);
    for (row, &i) in shift.domain.iter().enumerate() {
        for col in 0..q_d.rank {
            lift[(i, col)] = q_d.backward[(row, col)];
        }
    }
    let t = &q.forward * lift;
    let embedding_defect = (t.adjoint() * &t - CMat::identity(q_d.rank, q_d.rank)).norm();

    // Liouvillian in the real-time convention: Gamma_delta = e^{-delta L},
    // so L = -log(Gamma_delta)/delta on the embedded domain.
    let log_diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        mu.len(),
        mu.iter().map(|&v| C64::new(-v.ln() / delta, 0.0)),
    ));
    let l_domain = &vectors * log_diag * vectors.adjoint();
    let liouvillian = hermitian_part(&(&t * l_domain * t.adjoint()));
    let hermiticity_residual =
        (&liouvillian - liouvillian.adjoint()).norm() / (1.0 + liouvillian.norm());

    let omega_idx = basis
        .words
        .iter()
        .position(|w| w.is_empty())
        .ok_or_else(|| Error::Closure("basis lacks the empty word".into()))?;
    let omega = q.forward.column(omega_idx).into_owned();

    let u_j = build_j(oracle, &basis, &q)?;
    let j_involution_residual =
        (&u_j * u_j.map(|v| v.conj()) - CMat::identity(q.rank, q.rank)).norm();
    let j_vacuum_residual = (&u_j * omega.map(|v| v.conj()) - &omega).norm();
    let j_liouvillian_residual =
        (&u_j * liouvillian.map(|v| v.conj()) + &liouvillian * &u_j).norm()
            / (1.0 + liouvillian.norm());

    let gen_count = oracle.generators().len();
    let mut lambdas = Vec::with_capacity(gen_count);
    let mut rhos = Vec::with_capacity(gen_count);
    let mut contracts = Vec::with_capacity(gen_count);
    for g in 0..gen_count {
        let (lambda, rho, contract) = represent(oracle, &basis, &q, &u_j, g)?;
        lambdas.push(lambda);
        rhos.push(rho);
        contracts.push(contract);
    }

    let eig = eigh(&liouvillian);
    let spectrum: Vec<f64> = eig.values.iter().cloned().collect();
    let gram_condition = if q.eigenvalues.is_empty() {
        1.0
    } else {
        q.eigenvalues[0] / q.eigenvalues[q.eigenvalues.len() - 1].max(1e-300)
    };

    let report = ReconstructionReport {
        basis_size: basis.len(),
        rank: q.rank,
        rel_tol: params.rel_tol,
        delta,
        spectrum,
        consistency_mismatch,
        embedding_defect,
        domain_rank: q_d.rank,
        hermiticity_residual,
        j_involution_residual,
        j_vacuum_residual,
        j_liouvillian_residual,
        contracts,
        gram_condition,
    };
    let space = ReconstructedSpace {
        basis,
        gram,
        quotient: q,
        liouvillian_eig: (eig.values, eig.vectors),
        liouvillian,
        omega,
        u_j,
        lambdas,
        rhos,
        generators: oracle.generators().to_vec(),
        beta: oracle.beta(),
    };
    Ok((space, report))
}

impl ReconstructedSpace {
    pub fn rank(&self) -> usize {
        self.omega.len()
    }

    /// A spectral function of the Liouvillian, e.g. `e^{itL}`.
    pub fn liouvillian_fn(&self, f: impl Fn(f64) -> C64) -> CMat {
        let (values, vectors) = &self.liouvillian_eig;
        let d = CMat::from_diagonal(&values.map(f));
        vectors * d * vectors.adjoint()
    }

    /// Reconstructed real-time Green function
    /// `< prod_j e^{i t_j L} lambda(a_j) e^{-i t_j L} Omega, Omega >`.
    pub fn rtgf(&self, word: &[(usize, f64)]) -> C64 {
        let mut x = self.omega.clone();
        for &(g, t) in word.iter().rev() {
            let u = self.liouvillian_fn(|l| (C64::i() * l * t).exp());
            x = &u * &self.lambdas[g] * u.adjoint() * x;
        }
        pairing(&x, &self.omega)
    }

    /// Largest over the grid of
    /// `|F_ab(t) - <e^{itL} e^{-beta L/2} lambda(a) Omega,
    ///             e^{-beta L/2} lambda(b*) Omega>|`,
    /// the real-time KMS identity of the reconstructed theory.
    pub fn realtime_kms_residual(&self, a: usize, b: usize, t_grid: &[f64]) -> f64 {
        let boost = self.liouvillian_fn(|l| C64::new((-self.beta * l / 2.0).exp(), 0.0));
        let star_b = self.generators[b].star;
        let left = &boost * &self.lambdas[a] * &self.omega;
        let right = &boost * &self.lambdas[star_b] * &self.omega;
        let mut worst = 0.0f64;
        for &t in t_grid {
            let f = self.rtgf(&[(a, t), (b, 0.0)]);
            let u = self.liouvillian_fn(|l| (C64::i() * l * t).exp());
            let g = pairing(&(&u * &left), &right);
            worst = worst.max((f - g).norm());
        }
        worst
    }
}

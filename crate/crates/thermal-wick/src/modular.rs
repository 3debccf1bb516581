//! Finite-dimensional GNS representation and Tomita-Takesaki modular
//! objects for the Gibbs state: the operator `S`, the modular conjugation
//! `J`, its polar decomposition, the commutant theorem and ergodic
//! averages. This is the exact reference against which the reconstruction
//! pipeline is validated.
//!
//! The carrier is the Hilbert-Schmidt space of `d x d` matrices with
//! `<A, B> = tr(B* A)`, vectorized column-major, so the space has dimension
//! `d^2`. The vacuum is `rho^{1/2}`, `lambda(a)` acts by left
//! multiplication and the Liouvillian is the commutator with `H_mu`.

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermitian_fn, null_space, pairing, span_residual, CMat, CVec};
use crate::system::{Observable, ThermalSystem};
use nalgebra::DVector;
use num_complex::Complex64 as C64;

/// An anti-linear map in normal form `x -> M conj(x)`.
#[derive(Debug, Clone)]
pub struct AntiLinearMap {
    pub matrix: CMat,
}

impl AntiLinearMap {
    pub fn apply(&self, x: &CVec) -> CVec {
        &self.matrix * x.map(|v| v.conj())
    }

    /// Composition with itself; the result is a linear map.
    pub fn squared(&self) -> CMat {
        &self.matrix * self.matrix.map(|v| v.conj())
    }
}

/// The GNS triple of a Gibbs state in its Hilbert-Schmidt realization.
pub struct GnsTriple {
    dim: usize,
    beta: f64,
    /// Coordinates of the vacuum `rho^{1/2}`.
    pub omega: CVec,
    /// `L = [H_mu, .]` as a `d^2 x d^2` Hermitian matrix with spectrum
    /// `{E_i - E_j}`.
    pub liouvillian: CMat,
}

impl GnsTriple {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn carrier_dim(&self) -> usize {
        self.dim * self.dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Left multiplication `X -> a X` as a matrix on the carrier.
    pub fn lambda(&self, a: &CMat) -> CMat {
        CMat::identity(self.dim, self.dim).kronecker(a)
    }

    /// Right multiplication `X -> X a*` as a matrix on the carrier.
    pub fn rho_right(&self, a: &CMat) -> CMat {
        a.map(|v| v.conj()).kronecker(&CMat::identity(self.dim, self.dim))
    }

    /// A function of the Liouvillian through its spectrum.
    pub fn liouvillian_fn(&self, f: impl Fn(f64) -> C64) -> CMat {
        hermitian_fn(&self.liouvillian, f)
    }

    /// Hilbert-Schmidt inner product of carrier vectors: `sum x_k conj(y_k)`.
    pub fn inner(&self, x: &CVec, y: &CVec) -> C64 {
        pairing(x, y)
    }

    /// `<lambda(a) Omega, Omega> = tr(rho a)`.
    pub fn expectation(&self, a: &CMat) -> C64 {
        self.inner(&(self.lambda(a) * &self.omega), &self.omega)
    }

    /// Rank of `{lambda(e_ij) Omega}`; equals `d^2` exactly when the vacuum
    /// is cyclic and separating.
    pub fn separating_rank(&self) -> usize {
        let x = self.vacuum_orbit();
        let eig = eigh(&(x.adjoint() * &x));
        let lmax = eig.values.max().max(1e-300);
        eig.values.iter().filter(|&&v| v > 1e-12 * lmax).count()
    }

    /// Columns `vec(e_ij rho^{1/2})` over all matrix units.
    fn vacuum_orbit(&self) -> CMat {
        let d2 = self.carrier_dim();
        let mut x = CMat::zeros(d2, d2);
        let mut col = 0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut unit = CMat::zeros(self.dim, self.dim);
                unit[(i, j)] = C64::new(1.0, 0.0);
                x.set_column(col, &(self.lambda(&unit) * &self.omega));
                col += 1;
            }
        }
        x
    }
}

/// Build the GNS triple of the Gibbs state of `sys`.
pub fn gns(sys: &ThermalSystem) -> GnsTriple {
    let d = sys.dim();
    let gibbs = sys.gibbs_state();
    let sqrt_rho = hermitian_fn(&gibbs.rho, |p| C64::new(p.max(0.0).sqrt(), 0.0));
    let omega = CVec::from_iterator(d * d, sqrt_rho.iter().cloned());
    let h_mu = sys.h_mu();
    let id = CMat::identity(d, d);
    let liouvillian = id.kronecker(&h_mu) - h_mu.transpose().kronecker(&id);
    GnsTriple { dim: d, beta: sys.beta(), omega, liouvillian }
}

/// The Tomita operator `S`, the modular conjugation `J` and the positive
/// factor `e^{-beta L / 2}` of the polar decomposition `S = J e^{-beta L/2}`.
pub struct ModularData {
    pub s: AntiLinearMap,
    pub j: AntiLinearMap,
    pub delta_half: CMat,
}

/// Solve `S lambda(a) Omega = lambda(a*) Omega` for the anti-linear `S` and
/// polar-decompose it into the anti-unitary `J` and the positive factor via
/// the SVD of the matrix part.
///
/// Fails with [`Error::SeparatingFailure`] when the vacuum orbit does not
/// span the carrier, i.e. the defining linear system is singular.
pub fn tomita(gns: &GnsTriple) -> Result<ModularData> {
    let d = gns.dim();
    let d2 = gns.carrier_dim();
    let mut x = CMat::zeros(d2, d2);
    let mut y = CMat::zeros(d2, d2);
    let mut col = 0;
    for i in 0..d {
        for j in 0..d {
            let mut unit = CMat::zeros(d, d);
            unit[(i, j)] = C64::new(1.0, 0.0);
            let star = unit.adjoint();
            x.set_column(col, &(gns.lambda(&unit) * &gns.omega));
            y.set_column(col, &(gns.lambda(&star) * &gns.omega));
            col += 1;
        }
    }
    // S (X c) = Y c for all coefficient vectors c, with S x = M_S conj(x).
    let x_conj = x.map(|v| v.conj());
    let svals = x_conj.clone().svd(false, false).singular_values;
    if svals.min() <= 1e-12 * svals.max() {
        return Err(Error::SeparatingFailure);
    }
    let m_s = &y
        * x_conj
            .lu()
            .try_inverse()
            .ok_or(Error::SeparatingFailure)?;

    // Polar decomposition M_S = M_J conj(Delta^{1/2}) with M_J unitary and
    // Delta^{1/2} positive, via the SVD of M_S.
    let svd = m_s.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u requested");
    let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
    let m_j = u * v_t;
    let delta_half = gns.liouvillian_fn(|l| C64::new((-gns.beta() * l / 2.0).exp(), 0.0));
    Ok(ModularData {
        s: AntiLinearMap { matrix: m_s },
        j: AntiLinearMap { matrix: m_j },
        delta_half,
    })
}

/// Orthonormal basis (columns) of `{X : [X, M_k] = 0 for all k}` computed
/// by null-space extraction from the stacked commutation constraints.
pub fn commutant(mats: &[CMat]) -> CMat {
    assert!(!mats.is_empty(), "commutant of an empty set is everything");
    let n = mats[0].nrows();
    let id = CMat::identity(n, n);
    let mut rows = CMat::zeros(mats.len() * n * n, n * n);
    for (k, m) in mats.iter().enumerate() {
        let constraint = id.kronecker(m) - m.transpose().kronecker(&id);
        rows.view_mut((k * n * n, 0), (n * n, n * n))
            .copy_from(&constraint);
    }
    null_space(&rows)
}

/// Residuals of the commutant theorem `lambda(A)' = J lambda(A) J`.
#[derive(Debug, Clone)]
pub struct CommutantReport {
    pub commutant_dim: usize,
    /// Mutual projection residual between `commutant(lambda(A))` and the
    /// span of `J lambda(e_ij) J`.
    pub span_residual: f64,
    /// Largest `||[rho(a), lambda(b)]||` over the supplied pairs.
    pub max_commutator: f64,
}

/// Check span-equality of `commutant(lambda(A))` and `J lambda(A) J`, and
/// `[rho(a), lambda(b)] = 0` on the given pairs.
pub fn verify_commutant_theorem(
    gns: &GnsTriple,
    modular: &ModularData,
    pairs: &[(CMat, CMat)],
) -> CommutantReport {
    let d = gns.dim();
    let j_conj = |m: &CMat| -> CMat {
        // J M J with J x = M_J conj(x) acts linearly as
        // M_J conj(M) conj(M_J).
        &modular.j.matrix * m.map(|v| v.conj()) * modular.j.matrix.map(|v| v.conj())
    };
    let mut lambdas = Vec::with_capacity(d * d);
    let mut jlj = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut unit = CMat::zeros(d, d);
            unit[(i, j)] = C64::new(1.0, 0.0);
            let lam = gns.lambda(&unit);
            jlj.push(j_conj(&lam));
            lambdas.push(lam);
        }
    }
    let comm = commutant(&lambdas);
    let d2 = d * d;
    let mut jlj_cols = CMat::zeros(d2 * d2, jlj.len());
    for (c, m) in jlj.iter().enumerate() {
        jlj_cols.set_column(c, &CVec::from_iterator(d2 * d2, m.iter().cloned()));
    }
    let mut span = 0.0f64;
    for c in 0..jlj_cols.ncols() {
        span = span.max(span_residual(&comm, &jlj_cols.column(c).into_owned()));
    }
    for c in 0..comm.ncols() {
        span = span.max(span_residual(&jlj_cols, &comm.column(c).into_owned()));
    }

    let mut max_comm = 0.0f64;
    for (a, b) in pairs {
        let rho_a = j_conj(&gns.lambda(a));
        let lam_b = gns.lambda(b);
        max_comm = max_comm.max((&rho_a * &lam_b - lam_b * rho_a).norm());
    }
    CommutantReport {
        commutant_dim: comm.ncols(),
        span_residual: span,
        max_commutator: max_comm,
    }
}

/// Result of a Cesàro time average.
#[derive(Debug, Clone)]
pub struct CesaroResult {
    /// `(1/T) int_0^T <e^{itL} lambda(a) e^{-itL} Psi, Psi> dt` by
    /// composite Simpson quadrature.
    pub average: C64,
    /// The exact `T -> infinity` limit: the expectation through the
    /// spectral projections of `L` onto coinciding eigenvalues. At finite
    /// dimension zero is never a simple eigenvalue of `L`, so this limit is
    /// generally distinct from the equilibrium expectation; the kernel
    /// dimension keeps that gap visible.
    pub kernel_projection: C64,
    /// Dimension of `ker L` (number of vanishing Bohr frequencies).
    pub kernel_dim: usize,
    /// Richardson estimate of the quadrature error.
    pub quadrature_error: f64,
}

/// Average `<alpha_t(a)>_Psi` over `[0, T]` with about `steps` Simpson
/// panels and compare with the spectral kernel-projection limit.
pub fn cesaro_average(
    gns: &GnsTriple,
    psi: &CVec,
    a: &Observable,
    t_max: f64,
    steps: usize,
) -> Result<CesaroResult> {
    if !(t_max > 0.0) {
        return Err(Error::Config("Cesàro horizon T must be positive".into()));
    }
    let eig = eigh(&gns.liouvillian);
    let lam = gns.lambda(&a.matrix);
    let a_tilde = eig.vectors.adjoint() * lam * &eig.vectors;
    let psi_tilde = eig.vectors.adjoint() * psi;
    let d2 = gns.carrier_dim();

    // f(t) = sum_{j,k} e^{it(l_j - l_k)} c_{jk}
    let mut coeff = CMat::zeros(d2, d2);
    for j in 0..d2 {
        for k in 0..d2 {
            coeff[(j, k)] = a_tilde[(j, k)] * psi_tilde[k] * psi_tilde[j].conj();
        }
    }
    let f = |t: f64| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..d2 {
            for k in 0..d2 {
                let w = eig.values[j] - eig.values[k];
                acc += coeff[(j, k)] * (C64::i() * w * t).exp();
            }
        }
        acc
    };

    let simpson = |panels: usize| -> C64 {
        let h = t_max / panels as f64;
        let mut acc = f(0.0) + f(t_max);
        for k in 1..panels {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += f(k as f64 * h) * w;
        }
        acc * (h / 3.0) / t_max
    };
    let panels = (steps.max(4) + steps.max(4) % 2).max(4);
    let fine = simpson(panels);
    let coarse = simpson(panels / 2);
    let quadrature_error = (fine - coarse).norm() / 15.0;
    if quadrature_error > 1e-6 {
        return Err(Error::Quadrature { estimate: quadrature_error, tolerance: 1e-6 });
    }

    let scale = eig.values.amax().max(1.0);
    let tol = 1e-8 * scale;
    let mut kernel_projection = C64::new(0.0, 0.0);
    for j in 0..d2 {
        for k in 0..d2 {
            if (eig.values[j] - eig.values[k]).abs() <= tol {
                kernel_projection += coeff[(j, k)];
            }
        }
    }
    let kernel_dim = eig.values.iter().filter(|l| l.abs() <= tol).count();
    Ok(CesaroResult { average: fine, kernel_projection, kernel_dim, quadrature_error })
}

/// Bohr frequencies `E_i - E_j` of the system, sorted ascending: the exact
/// spectrum of the Liouvillian.
pub fn bohr_frequencies(sys: &ThermalSystem) -> DVector<f64> {
    let e = sys.energies();
    let d = sys.dim();
    let mut freqs: Vec<f64> = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            freqs.push(e[i] - e[j]);
        }
    }
    freqs.sort_by(f64::total_cmp);
    DVector::from_vec(freqs)
}

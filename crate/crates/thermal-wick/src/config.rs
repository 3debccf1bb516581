//! JSON experiment configuration.
//!
//! The schema is versioned in `docs/config-schema.md`; the structs here are
//! its source of truth. Unknown fields are rejected so that typos fail
//! loudly. A `seed` is mandatory as soon as any task draws randomness, so
//! runs are reproducible byte for byte.

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::oracle::{
    matrix_unit_generators, matrix_unit_generators_with_identity, BosonOracle, FermionOracle,
    FiniteSystemOracle, TogfOracle,
};
use crate::system::ThermalSystem;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A complex entry as `[re, im]`.
pub type JsonComplex = [f64; 2];

/// System description: a named preset, a seeded random Hermitian matrix, or
/// explicit matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSpec {
    /// Two-level system `H = diag(0, energy)`.
    Qubit { energy: f64, beta: f64 },
    /// Seeded random Hermitian Hamiltonian of the given dimension.
    RandomSeeded { dim: usize, beta: f64 },
    /// Explicit Hamiltonian, optional charges and chemical potentials.
    Explicit {
        h: Vec<Vec<JsonComplex>>,
        #[serde(default)]
        charges: Vec<Vec<Vec<JsonComplex>>>,
        #[serde(default)]
        mu: Vec<f64>,
        beta: f64,
    },
}

/// Generator sets for the finite-system oracle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorSet {
    MatrixUnits,
    MatrixUnitsWithIdentity,
}

impl Default for GeneratorSet {
    fn default() -> Self {
        GeneratorSet::MatrixUnits
    }
}

/// Oracle description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OracleSpec {
    /// Exact oracle over a finite system.
    Finite {
        system: SystemSpec,
        #[serde(default)]
        generators: GeneratorSet,
    },
    /// Quasi-free fermion modes.
    Fermion { energies: Vec<f64>, beta: f64 },
    /// Quasi-free boson modes with a Fock-truncation cross-check level.
    Boson {
        frequencies: Vec<f64>,
        beta: f64,
        #[serde(default = "default_n_trunc")]
        n_trunc: usize,
    },
}

fn default_n_trunc() -> usize {
    40
}

/// Verification and reconstruction tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    VerifyKms,
    VerifyGreen,
    Reconstruct,
    Roundtrip,
    Modular,
    Cesaro,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::VerifyKms => "verify-kms",
            TaskKind::VerifyGreen => "verify-green",
            TaskKind::Reconstruct => "reconstruct",
            TaskKind::Roundtrip => "roundtrip",
            TaskKind::Modular => "modular",
            TaskKind::Cesaro => "cesaro",
        }
    }

    /// Whether the task draws random trials (and therefore needs a seed).
    pub fn needs_seed(&self) -> bool {
        matches!(
            self,
            TaskKind::VerifyKms | TaskKind::VerifyGreen | TaskKind::Roundtrip | TaskKind::Modular
        )
    }
}

/// Pass/fail thresholds used in reports. Every residual the runner emits is
/// compared against exactly one of these; the defaults form the single
/// tolerance table documented in the book and in `docs/config-schema.md`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// KMS residual relative to `||a|| ||b||`.
    pub kms_rel: f64,
    /// Cyclic KMS and translation residuals, absolute.
    pub green_abs: f64,
    /// Reflection-positivity eigenvalue floor relative to `max(1, lambda_max)`.
    pub pi_psd_rel: f64,
    /// Tube bound excess.
    pub tube_excess: f64,
    /// Statistics dichotomy residual.
    pub periodicity_abs: f64,
    /// Liouvillian spectrum against Bohr frequencies, absolute.
    pub spectrum_abs: f64,
    /// Transfer-operator delta vs 2 delta relative mismatch.
    pub consistency_rel: f64,
    /// Round trip of real-time Green functions, absolute.
    pub roundtrip_abs: f64,
    /// Modular identities (J, S, rho = J lambda J, Lemma contracts).
    pub modular_abs: f64,
    /// Commutant span-equality residual.
    pub commutant_span: f64,
    /// Cesàro average against the kernel-projection limit.
    pub cesaro_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kms_rel: 1e-9,
            green_abs: 1e-10,
            pi_psd_rel: 1e-9,
            tube_excess: 1e-9,
            periodicity_abs: 1e-10,
            spectrum_abs: 1e-7,
            consistency_rel: 1e-8,
            roundtrip_abs: 1e-7,
            modular_abs: 1e-7,
            commutant_span: 1e-9,
            cesaro_abs: 1e-4,
        }
    }
}

/// One curve to emit as CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    /// `rtgf` (columns `t,re,im`) or `togf` (columns `tau,value`).
    pub kind: CurveKind,
    /// Output file name, relative to the output directory.
    pub file: String,
    /// Word letters; exactly one entry must omit its time, that letter
    /// sweeps over the grid.
    pub word: Vec<CurveLetter>,
    pub sweep: SweepSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Rtgf,
    Togf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveLetter {
    /// Generator label, resolved against the oracle descriptor.
    pub gen: String,
    /// Fixed time; omit on the swept letter.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

/// Reconstruction and sampling knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Knobs {
    pub n_max: usize,
    pub m: usize,
    /// Shift for the Liouvillian extraction; defaults to the grid step.
    pub delta: Option<f64>,
    pub rel_tol: f64,
    pub basis_cap: usize,
    /// Number of random trials in randomized tasks.
    pub trials: usize,
    /// Real-time grid for KMS-type residuals; a default 10-point grid is
    /// used when empty.
    pub t_grid: Vec<f64>,
    /// Cesàro horizon and Simpson panel count.
    pub cesaro_t_max: f64,
    pub cesaro_steps: usize,
}

impl Default for Knobs {
    fn default() -> Self {
        Self {
            n_max: 1,
            m: 1,
            delta: None,
            rel_tol: 1e-10,
            basis_cap: 4096,
            trials: 50,
            t_grid: vec![],
            cesaro_t_max: 200.0,
            cesaro_steps: 40000,
        }
    }
}

/// Root configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSpec>,
    pub tasks: Vec<TaskKind>,
    #[serde(default)]
    pub knobs: Knobs,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurveSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() && self.curves.is_empty() {
            return Err(Error::Config("no tasks and no curves requested".into()));
        }
        let needs_seed = self.tasks.iter().any(TaskKind::needs_seed)
            || matches!(self.system, Some(SystemSpec::RandomSeeded { .. }))
            || matches!(
                self.oracle,
                Some(OracleSpec::Finite { system: SystemSpec::RandomSeeded { .. }, .. })
            );
        if needs_seed && self.seed.is_none() {
            return Err(Error::Config(
                "tasks draw randomness but no seed is configured".into(),
            ));
        }
        Ok(())
    }
}

fn parse_matrix(rows: &[Vec<JsonComplex>]) -> Result<CMat> {
    let d = rows.len();
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::Config("matrix rows must all have length d".into()));
    }
    Ok(CMat::from_fn(d, d, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// Deterministic random Hermitian matrix with entries of order one.
pub fn random_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
    let raw = CMat::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&raw + raw.adjoint()) * C64::new(0.5, 0.0)
}

impl SystemSpec {
    /// Materialize the system; `seed` feeds the `random-seeded` kind.
    pub fn build(&self, seed: Option<u64>) -> Result<ThermalSystem> {
        match self {
            SystemSpec::Qubit { energy, beta } => {
                if !(*beta > 0.0) {
                    return Err(Error::Config("beta must be positive".into()));
                }
                Ok(ThermalSystem::qubit(*energy, *beta))
            }
            SystemSpec::RandomSeeded { dim, beta } => {
                let seed = seed.ok_or_else(|| {
                    Error::Config("random-seeded system needs a seed".into())
                })?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                ThermalSystem::new(random_hermitian(*dim, &mut rng), vec![], vec![], *beta)
            }
            SystemSpec::Explicit { h, charges, mu, beta } => {
                let h = parse_matrix(h)?;
                let charges = charges
                    .iter()
                    .map(|q| parse_matrix(q))
                    .collect::<Result<Vec<_>>>()?;
                ThermalSystem::new(h, charges, mu.clone(), *beta)
            }
        }
    }
}

impl OracleSpec {
    pub fn build(&self, seed: Option<u64>) -> Result<Box<dyn TogfOracle>> {
        match self {
            OracleSpec::Finite { system, generators } => {
                let sys = system.build(seed)?;
                let gens = match generators {
                    GeneratorSet::MatrixUnits => matrix_unit_generators(sys.dim()),
                    GeneratorSet::MatrixUnitsWithIdentity => {
                        matrix_unit_generators_with_identity(sys.dim())
                    }
                };
                Ok(Box::new(FiniteSystemOracle::new(sys, gens)?))
            }
            OracleSpec::Fermion { energies, beta } => {
                Ok(Box::new(FermionOracle::new(energies.clone(), *beta)?))
            }
            OracleSpec::Boson { frequencies, beta, n_trunc } => {
                Ok(Box::new(BosonOracle::new(frequencies.clone(), *beta, *n_trunc)?))
            }
        }
    }
}

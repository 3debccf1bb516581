//! Batch execution of configured tasks: builds systems and oracles, runs
//! verifications and reconstructions, and writes `report.json` plus curve
//! CSVs into an output directory.

use crate::config::{
    random_hermitian, CurveKind, CurveSpec, ExperimentConfig, OracleSpec, TaskKind,
};
use crate::error::{Error, Result};
use crate::green::{build_pi_matrix, cyclic_kms_residual, sample_tube, translation_residual, tube_bound_check};
use crate::linalg::{CMat, CVec};
use crate::modular::{bohr_frequencies, cesaro_average, gns, tomita, verify_commutant_theorem};
use crate::oracle::{check_cyclic_periodicity, FiniteSystemOracle, FormalWord, Letter, TogfOracle};
use crate::reconstruct::{reconstruct, ReconstructParams};
use crate::report::{config_hash, write_atomic, Report, ResidualRecord};
use crate::system::{Observable, ThermalSystem};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Cap the global rayon pool from `THERMAL_WICK_THREADS`, once.
pub fn configure_threads() {
    if let Ok(text) = std::env::var("THERMAL_WICK_THREADS") {
        if let Ok(n) = text.trim().parse::<usize>() {
            if n >= 1 {
                // Ignore the error when a pool already exists.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Execute every task in order, then emit curves; returns the report.
/// Configuration problems abort with an error; numerical failures inside a
/// task are recorded in the report, which is still written.
pub fn run(config: &ExperimentConfig, raw_config: &[u8], out_dir: &Path, verbose: bool) -> Result<Report> {
    config.validate()?;
    configure_threads();
    std::fs::create_dir_all(out_dir)?;
    let mut report = Report::new(config_hash(raw_config));

    for task in &config.tasks {
        let records = match run_task(*task, config, &mut report) {
            Ok(records) => records,
            Err(Error::Config(msg)) => return Err(Error::Config(msg)),
            Err(e) => vec![ResidualRecord::failed(task.name(), "execution", 0.0, e.to_string())],
        };
        for record in records {
            if verbose {
                match record.value {
                    Some(v) => eprintln!(
                        "[{}] {} = {:.3e} (tol {:.1e}) {}",
                        record.task,
                        record.name,
                        v,
                        record.tolerance,
                        if record.pass { "ok" } else { "FAIL" }
                    ),
                    None => eprintln!(
                        "[{}] {} failed: {}",
                        record.task,
                        record.name,
                        record.error.as_deref().unwrap_or("unknown")
                    ),
                }
            }
            report.push(record);
        }
    }

    for curve in &config.curves {
        emit_curve(config, curve, out_dir)?;
    }

    write_atomic(&out_dir.join("report.json"), &report.to_json()?)?;
    Ok(report)
}

fn resolve_oracle(config: &ExperimentConfig) -> Result<Box<dyn TogfOracle>> {
    if let Some(spec) = &config.oracle {
        spec.build(config.seed)
    } else if let Some(system) = &config.system {
        OracleSpec::Finite {
            system: system.clone(),
            generators: Default::default(),
        }
        .build(config.seed)
    } else {
        Err(Error::Config("task needs a system or an oracle".into()))
    }
}

fn resolve_system(config: &ExperimentConfig) -> Result<ThermalSystem> {
    if let Some(system) = &config.system {
        system.build(config.seed)
    } else if let Some(OracleSpec::Finite { system, .. }) = &config.oracle {
        system.build(config.seed)
    } else {
        Err(Error::Config("task needs a finite system".into()))
    }
}

fn random_observable(dim: usize, rng: &mut ChaCha8Rng, label: &str) -> Observable {
    let h = random_hermitian(dim, rng);
    let s = random_hermitian(dim, rng);
    Observable::new(label, h + s * C64::i()).expect("square matrix")
}

fn default_t_grid(knobs_grid: &[f64]) -> Vec<f64> {
    if knobs_grid.is_empty() {
        (0..10).map(|k| -2.0 + 0.45 * k as f64).collect()
    } else {
        knobs_grid.to_vec()
    }
}

fn run_task(task: TaskKind, config: &ExperimentConfig, report: &mut Report) -> Result<Vec<ResidualRecord>> {
    let tol = &config.tolerances;
    let knobs = &config.knobs;
    let mut records = Vec::new();
    match task {
        TaskKind::VerifyKms => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0));
            let t_grid = default_t_grid(&knobs.t_grid);
            let mut worst = 0.0f64;
            if let Some(system) = &config.system {
                let sys = system.build(config.seed)?;
                for _ in 0..knobs.trials {
                    let a = random_observable(sys.dim(), &mut rng, "a");
                    let b = random_observable(sys.dim(), &mut rng, "b");
                    let r = sys.kms_residual(&a, &b, &t_grid) / (a.norm() * b.norm());
                    worst = worst.max(r);
                }
            } else {
                for trial in 0..knobs.trials {
                    let dim = 2 + trial % 4;
                    let beta = 0.5 + rng.gen_range(0.0..2.0);
                    let sys = ThermalSystem::new(
                        random_hermitian(dim, &mut rng),
                        vec![],
                        vec![],
                        beta,
                    )?;
                    let a = random_observable(dim, &mut rng, "a");
                    let b = random_observable(dim, &mut rng, "b");
                    let r = sys.kms_residual(&a, &b, &t_grid) / (a.norm() * b.norm());
                    worst = worst.max(r);
                }
            }
            records.push(ResidualRecord::measured(
                task.name(),
                "kms_residual_rel",
                worst,
                tol.kms_rel,
            ));
        }
        TaskKind::VerifyGreen => {
            let oracle = resolve_oracle(config)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0).wrapping_add(1));
            let beta = oracle.beta();
            let gen_count = oracle.generators().len();

            let mut cyclic_worst = 0.0f64;
            let mut translation_worst = 0.0f64;
            for _ in 0..knobs.trials {
                let n = rng.gen_range(2..=4usize);
                let mut taus: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..beta)).collect();
                taus.sort_by(f64::total_cmp);
                let word: FormalWord = taus
                    .iter()
                    .map(|&tau| Letter::new(rng.gen_range(0..gen_count), tau))
                    .collect();
                let j = rng.gen_range(1..n);
                cyclic_worst = cyclic_worst.max(cyclic_kms_residual(oracle.as_ref(), &word, j)?);
                let shift = rng.gen_range(0.0..beta);
                translation_worst =
                    translation_worst.max(translation_residual(oracle.as_ref(), &word, shift)?);
            }
            records.push(ResidualRecord::measured(
                task.name(),
                "cyclic_kms_residual",
                cyclic_worst,
                tol.green_abs,
            ));
            records.push(ResidualRecord::measured(
                task.name(),
                "translation_residual",
                translation_worst,
                tol.green_abs,
            ));

            // Reflection positivity on random half-word families.
            let n_half = 8.min(2 + knobs.trials);
            let mut half_words: Vec<FormalWord> = vec![vec![]];
            for _ in 1..n_half {
                let n = rng.gen_range(1..=2usize);
                let mut taus: Vec<f64> = (0..n)
                    .map(|_| rng.gen_range(0.05 * beta..0.45 * beta))
                    .collect();
                taus.sort_by(f64::total_cmp);
                taus.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
                half_words.push(
                    taus.iter()
                        .map(|&tau| Letter::new(rng.gen_range(0..gen_count), tau))
                        .collect(),
                );
            }
            let pi = build_pi_matrix(oracle.as_ref(), &half_words)?;
            let deficit = (-pi.min_eigenvalue()).max(0.0) / pi.max_eigenvalue().max(1.0);
            records.push(ResidualRecord::measured(
                task.name(),
                "pi_psd_deficit_rel",
                deficit,
                tol.pi_psd_rel,
            ));

            // Tube bound needs the exact system behind a finite oracle.
            if let Ok(sys) = resolve_system(config) {
                let gens = crate::oracle::matrix_unit_generators(sys.dim());
                let word: Vec<&Observable> = gens.iter().take(3).collect();
                let samples = sample_tube(word.len(), sys.beta(), 100, 2.0);
                let excess = tube_bound_check(&sys, &word, &samples)?;
                records.push(ResidualRecord::measured(
                    task.name(),
                    "tube_bound_excess",
                    excess.max(0.0),
                    tol.tube_excess,
                ));
            }

            // Statistics dichotomy for quasi-free oracles.
            if let Some(OracleSpec::Fermion { .. } | OracleSpec::Boson { .. }) = &config.oracle {
                let modes = oracle.generators().len() / 2;
                let grid: Vec<f64> = (1..=6).map(|k| k as f64 * beta / 7.0).collect();
                let probe = check_cyclic_periodicity(oracle.as_ref(), modes, 0, &grid)?;
                let fitted = probe
                    .antiperiodic_residual
                    .min(probe.periodic_residual);
                records.push(ResidualRecord::measured(
                    task.name(),
                    "periodicity_residual",
                    fitted,
                    tol.periodicity_abs,
                ));
                report.periodicity = Some(probe);
            }
        }
        TaskKind::Reconstruct => {
            let oracle = resolve_oracle(config)?;
            let params = ReconstructParams {
                n_max: knobs.n_max,
                m: knobs.m,
                delta: knobs.delta,
                rel_tol: knobs.rel_tol,
                basis_cap: knobs.basis_cap,
            };
            let (_, recon) = reconstruct(oracle.as_ref(), &params)?;
            records.push(ResidualRecord::measured(
                task.name(),
                "j_involution_residual",
                recon.j_involution_residual,
                tol.modular_abs,
            ));
            records.push(ResidualRecord::measured(
                task.name(),
                "j_vacuum_residual",
                recon.j_vacuum_residual,
                tol.modular_abs,
            ));
            records.push(ResidualRecord::measured(
                task.name(),
                "j_liouvillian_residual",
                recon.j_liouvillian_residual,
                tol.modular_abs,
            ));
            if let Some(mismatch) = recon.consistency_mismatch {
                records.push(ResidualRecord::measured(
                    task.name(),
                    "semigroup_consistency",
                    mismatch,
                    tol.consistency_rel,
                ));
            }
            let contract_worst = recon
                .contracts
                .iter()
                .map(|c| c.norm_excess.max(c.adjoint_residual).max(c.conjugation_residual))
                .fold(0.0f64, f64::max);
            records.push(ResidualRecord::measured(
                task.name(),
                "representation_contracts",
                contract_worst,
                tol.modular_abs,
            ));
            // Against the exact Bohr spectrum when the dynamics is known.
            if let Ok(sys) = resolve_system(config) {
                let bohr = bohr_frequencies(&sys);
                let mut worst = 0.0f64;
                for &l in &recon.spectrum {
                    let nearest = bohr
                        .iter()
                        .map(|&b| (l - b).abs())
                        .fold(f64::INFINITY, f64::min);
                    worst = worst.max(nearest);
                }
                records.push(ResidualRecord::measured(
                    task.name(),
                    "spectrum_vs_bohr",
                    worst,
                    tol.spectrum_abs,
                ));
            }
            report.reconstruction = Some(recon);
        }
        TaskKind::Roundtrip => {
            let oracle_spec = config.oracle.clone().or_else(|| {
                config.system.clone().map(|system| OracleSpec::Finite {
                    system,
                    generators: Default::default(),
                })
            });
            let Some(OracleSpec::Finite { system, generators }) = oracle_spec else {
                return Err(Error::Config(
                    "roundtrip needs a finite-system oracle to compare against".into(),
                ));
            };
            let sys = system.build(config.seed)?;
            let gens = match generators {
                crate::config::GeneratorSet::MatrixUnits => {
                    crate::oracle::matrix_unit_generators(sys.dim())
                }
                crate::config::GeneratorSet::MatrixUnitsWithIdentity => {
                    crate::oracle::matrix_unit_generators_with_identity(sys.dim())
                }
            };
            let oracle = FiniteSystemOracle::new(sys.clone(), gens.clone())?;
            let params = ReconstructParams {
                n_max: knobs.n_max,
                m: knobs.m,
                delta: knobs.delta,
                rel_tol: knobs.rel_tol,
                basis_cap: knobs.basis_cap,
            };
            let (space, _) = reconstruct(&oracle, &params)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0).wrapping_add(2));
            let mut worst = 0.0f64;
            for _ in 0..knobs.trials {
                let n = rng.gen_range(1..=3usize);
                let word: Vec<(usize, f64)> = (0..n)
                    .map(|_| (rng.gen_range(0..gens.len()), rng.gen_range(-2.0..2.0)))
                    .collect();
                let rec = space.rtgf(&word);
                let obs_word: Vec<(&Observable, f64)> =
                    word.iter().map(|&(g, t)| (&gens[g], t)).collect();
                let exact = sys.rtgf(&obs_word);
                worst = worst.max((rec - exact).norm());
            }
            records.push(ResidualRecord::measured(
                task.name(),
                "roundtrip_rtgf",
                worst,
                tol.roundtrip_abs,
            ));
        }
        TaskKind::Modular => {
            let sys = resolve_system(config)?;
            let triple = gns(&sys);
            let modular = tomita(&triple)?;
            let d = sys.dim();
            let r = triple.carrier_dim();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0).wrapping_add(3));

            let jj = (modular.j.squared() - CMat::identity(r, r)).norm();
            records.push(ResidualRecord::measured(task.name(), "j_involution", jj, tol.modular_abs));
            let jo = (modular.j.apply(&triple.omega) - &triple.omega).norm();
            records.push(ResidualRecord::measured(task.name(), "j_vacuum", jo, tol.modular_abs));
            let jl = (&modular.j.matrix * triple.liouvillian.map(|v| v.conj())
                + &triple.liouvillian * &modular.j.matrix)
                .norm()
                / (1.0 + triple.liouvillian.norm());
            records.push(ResidualRecord::measured(task.name(), "j_liouvillian_anticommute", jl, tol.modular_abs));
            let s_re = (&modular.j.matrix * modular.delta_half.map(|v| v.conj())
                - &modular.s.matrix)
                .norm();
            records.push(ResidualRecord::measured(task.name(), "polar_reassembly", s_re, tol.modular_abs));

            // rho(a) = J lambda(a) J against right multiplication.
            let mut rho_worst = 0.0f64;
            let mut norm_excess = 0.0f64;
            let mut lemma2_worst = 0.0f64;
            for _ in 0..10 {
                let a = random_hermitian(d, &mut rng) + random_hermitian(d, &mut rng) * C64::i();
                let jlj = &modular.j.matrix
                    * triple.lambda(&a).map(|v| v.conj())
                    * modular.j.matrix.map(|v| v.conj());
                rho_worst = rho_worst.max((jlj - triple.rho_right(&a)).norm());
                let lam_norm = crate::linalg::operator_norm(&triple.lambda(&a));
                let a_norm = crate::linalg::operator_norm(&a);
                norm_excess = norm_excess.max((lam_norm - a_norm).max(0.0));
                let b = random_hermitian(d, &mut rng);
                for &t in &[0.0, 0.7] {
                    let u = triple.liouvillian_fn(|l| (C64::i() * l * t).exp());
                    let moved = &u * triple.lambda(&a) * u.adjoint();
                    let rho_b = triple.rho_right(&b);
                    lemma2_worst =
                        lemma2_worst.max((&moved * &rho_b - &rho_b * &moved).norm());
                }
            }
            records.push(ResidualRecord::measured(task.name(), "rho_equals_jlj", rho_worst, tol.modular_abs));
            records.push(ResidualRecord::measured(task.name(), "lambda_norm_excess", norm_excess, tol.modular_abs));
            records.push(ResidualRecord::measured(task.name(), "flow_commutant", lemma2_worst, tol.modular_abs));

            if d <= 3 {
                let pairs: Vec<(CMat, CMat)> = (0..10)
                    .map(|_| {
                        (
                            random_hermitian(d, &mut rng),
                            random_hermitian(d, &mut rng),
                        )
                    })
                    .collect();
                let commutant = verify_commutant_theorem(&triple, &modular, &pairs);
                records.push(ResidualRecord::measured(
                    task.name(),
                    "commutant_span_residual",
                    commutant.span_residual,
                    tol.commutant_span,
                ));
            }
        }
        TaskKind::Cesaro => {
            let sys = resolve_system(config)?;
            let triple = gns(&sys);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0).wrapping_add(4));
            // Perturb the vacuum by the basis-reversal flip (sigma_x for a
            // qubit): a vector state normal with respect to the Gibbs
            // state.
            let d = sys.dim();
            let flip = CMat::from_fn(d, d, |i, j| {
                if i + j == d - 1 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let psi_raw: CVec = triple.lambda(&flip) * &triple.omega;
            let psi = &psi_raw / C64::new(psi_raw.norm(), 0.0);
            let a = random_observable(sys.dim(), &mut rng, "probe");
            let result = cesaro_average(&triple, &psi, &a, knobs.cesaro_t_max, knobs.cesaro_steps)?;
            let gap = (result.average - result.kernel_projection).norm();
            records.push(ResidualRecord::measured(
                task.name(),
                "cesaro_vs_kernel_projection",
                gap,
                tol.cesaro_abs,
            ));
        }
    }
    Ok(records)
}

/// Evaluate and write one curve file. RTGF curves use the exact system when
/// one is configured, otherwise the reconstructed space; TOGF curves always
/// evaluate through the oracle.
fn emit_curve(config: &ExperimentConfig, curve: &CurveSpec, out_dir: &Path) -> Result<()> {
    let oracle = resolve_oracle(config)?;
    let labels: Vec<String> = oracle
        .generators()
        .iter()
        .map(|g| g.label.clone())
        .collect();
    let resolve = |label: &str| -> Result<usize> {
        labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Config(format!("unknown generator label {label}")))
    };
    let swept: Vec<usize> = curve
        .word
        .iter()
        .enumerate()
        .filter(|(_, l)| l.time.is_none())
        .map(|(i, _)| i)
        .collect();
    if swept.len() != 1 {
        return Err(Error::Config(
            "curve word must leave exactly one letter's time free".into(),
        ));
    }
    let swept = swept[0];
    if curve.sweep.points < 1 {
        return Err(Error::Config("curve needs at least one point".into()));
    }
    let step = if curve.sweep.points > 1 {
        (curve.sweep.max - curve.sweep.min) / (curve.sweep.points - 1) as f64
    } else {
        0.0
    };

    let mut lines = Vec::with_capacity(curve.sweep.points + 2);
    match curve.kind {
        CurveKind::Rtgf => {
            lines.push("# real-time Green function; columns: t, Re F, Im F".to_string());
            lines.push("t,re,im".to_string());
            let word_indices: Vec<usize> = curve
                .word
                .iter()
                .map(|l| resolve(&l.gen))
                .collect::<Result<Vec<_>>>()?;
            // Prefer the exact system when available.
            let sys = resolve_system(config).ok();
            let space = if sys.is_none() {
                let params = ReconstructParams {
                    n_max: config.knobs.n_max,
                    m: config.knobs.m,
                    delta: config.knobs.delta,
                    rel_tol: config.knobs.rel_tol,
                    basis_cap: config.knobs.basis_cap,
                };
                Some(reconstruct(oracle.as_ref(), &params)?.0)
            } else {
                None
            };
            let gens = sys
                .as_ref()
                .map(|s| crate::oracle::matrix_unit_generators(s.dim()));
            for k in 0..curve.sweep.points {
                let t_sweep = curve.sweep.min + step * k as f64;
                let value = if let (Some(sys), Some(gens)) = (&sys, &gens) {
                    let word: Vec<(&Observable, f64)> = curve
                        .word
                        .iter()
                        .zip(word_indices.iter())
                        .enumerate()
                        .map(|(i, (l, &g))| {
                            (&gens[g], if i == swept { t_sweep } else { l.time.unwrap() })
                        })
                        .collect();
                    sys.rtgf(&word)
                } else {
                    let word: Vec<(usize, f64)> = curve
                        .word
                        .iter()
                        .zip(word_indices.iter())
                        .enumerate()
                        .map(|(i, (l, &g))| {
                            (g, if i == swept { t_sweep } else { l.time.unwrap() })
                        })
                        .collect();
                    space.as_ref().expect("reconstructed space").rtgf(&word)
                };
                lines.push(format!("{},{},{}", t_sweep, value.re, value.im));
            }
        }
        CurveKind::Togf => {
            lines.push(
                "# temperature-ordered Green function; columns: tau, Re phi".to_string(),
            );
            lines.push("tau,value".to_string());
            let word_indices: Vec<usize> = curve
                .word
                .iter()
                .map(|l| resolve(&l.gen))
                .collect::<Result<Vec<_>>>()?;
            for k in 0..curve.sweep.points {
                let tau_sweep = curve.sweep.min + step * k as f64;
                let word: FormalWord = curve
                    .word
                    .iter()
                    .zip(word_indices.iter())
                    .enumerate()
                    .map(|(i, (l, &g))| {
                        Letter::new(g, if i == swept { tau_sweep } else { l.time.unwrap() })
                    })
                    .collect();
                let value = oracle.eval(&word)?;
                lines.push(format!("{},{}", tau_sweep, value.re));
            }
        }
    }
    let mut text = lines.join("\n");
    text.push('\n');
    write_atomic(&out_dir.join(&curve.file), &text)
}
